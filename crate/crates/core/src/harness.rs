//! Level and power estimation by Monte Carlo.
//!
//! Power replicates for alternative `a` use the stream `(seed, "power:<id>", r)`
//! and level replicates `(seed, "level:<null>", r)`, so every test sees the
//! same samples and results do not depend on the worker count.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaptive_test::{run_composite_invariant_test, run_simple_test};
use crate::alternatives::Alternative;
use crate::baselines::{calibrate_baseline, default_d_of_n, BaselineConfig, BaselineKind};
use crate::calibration::{calibrate, Budgets, CalibrationTable, NullStatistic, DEFAULT_U_GRID_SIZE};
use crate::error::{invalid, GofError, Result};
use crate::estimators::{ModelCollection, ScaleSearchPolicy};
use crate::null_models::NullDensity;
use crate::stream::derive_stream;

pub const MIN_REPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    /// Trigonometric models `D = 1..=D_tr`, on `F0(X)`.
    Ttr,
    /// Piecewise `D = 2..=D_ct` plus trigonometric `D = 1..=D_tr`, on `F0(X)`.
    TtrCt,
    /// Piecewise models over the real line, directly on `X`.
    Td,
    /// Scale-family test with piecewise models.
    Composite,
    Ks,
    KsExp,
    Br,
    Kl,
}

impl TestKind {
    pub fn name(self) -> &'static str {
        match self {
            TestKind::Ttr => "Ttr",
            TestKind::TtrCt => "TtrCt",
            TestKind::Td => "Td",
            TestKind::Composite => "Composite",
            TestKind::Ks => "KS",
            TestKind::KsExp => "KSExp",
            TestKind::Br => "BR",
            TestKind::Kl => "KL",
        }
    }
}

impl std::str::FromStr for TestKind {
    type Err = GofError;
    fn from_str(s: &str) -> Result<Self> {
        let all = [
            TestKind::Ttr,
            TestKind::TtrCt,
            TestKind::Td,
            TestKind::Composite,
            TestKind::Ks,
            TestKind::KsExp,
            TestKind::Br,
            TestKind::Kl,
        ];
        all.into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| invalid(format!("unknown test kind {s}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    pub d_tr: u32,
    pub d_ct: u32,
    /// Inclusive piecewise range for `Td` and `Composite`.
    pub d_range: (u32, u32),
    /// BR/KL dimension; `None` uses the sample-size default.
    pub d_of_n: Option<usize>,
    pub policy: ScaleSearchPolicy,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams { d_tr: 6, d_ct: 6, d_range: (1, 10), d_of_n: None, policy: ScaleSearchPolicy::default() }
    }
}

fn default_alpha() -> f64 {
    0.05
}
fn default_reps_power() -> usize {
    5000
}
fn default_reps_level() -> usize {
    20_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub test: TestKind,
    pub null: NullDensity,
    pub n: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub model_params: ModelParams,
    #[serde(default)]
    pub alternatives: Vec<String>,
    #[serde(default = "default_reps_power")]
    pub reps_power: usize,
    #[serde(default = "default_reps_level")]
    pub reps_level: usize,
    #[serde(default)]
    pub calib: Budgets,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(test: TestKind, null: NullDensity, n: usize) -> Self {
        ExperimentConfig {
            test,
            null,
            n,
            alpha: 0.05,
            model_params: ModelParams::default(),
            alternatives: Vec::new(),
            reps_power: default_reps_power(),
            reps_level: default_reps_level(),
            calib: Budgets::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid("alpha must lie in (0, 1)"));
        }
        for &b in &[self.reps_power, self.reps_level, self.calib.b1, self.calib.b2] {
            if b < MIN_REPS {
                return Err(GofError::BudgetTooSmall { got: b, min: MIN_REPS });
            }
        }
        if self.n < 2 {
            return Err(GofError::InsufficientSample { required: 2, got: self.n });
        }
        match self.test {
            TestKind::Composite if self.null != NullDensity::Exponential => {
                Err(invalid("the composite test is implemented for the exponential scale family"))
            }
            TestKind::KsExp if self.null != NullDensity::Exponential => Err(invalid("KSExp tests exponentiality")),
            _ => Ok(()),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    fn d_of_n(&self) -> usize {
        self.model_params.d_of_n.unwrap_or_else(|| default_d_of_n(self.n))
    }

    /// Data transform applied before the uniformity tests.
    fn transform(&self) -> Option<NullDensity> {
        match self.test {
            TestKind::Ttr | TestKind::TtrCt | TestKind::Br | TestKind::Kl if self.null != NullDensity::Uniform01 => {
                Some(self.null)
            }
            _ => None,
        }
    }

    pub fn models(&self) -> Result<ModelCollection> {
        let p = &self.model_params;
        match self.test {
            TestKind::Ttr => ModelCollection::fourier(1..=p.d_tr),
            TestKind::TtrCt => {
                Ok(ModelCollection::piecewise(2..=p.d_ct)?.union(&ModelCollection::fourier(1..=p.d_tr)?))
            }
            TestKind::Td | TestKind::Composite => ModelCollection::piecewise(p.d_range.0..=p.d_range.1),
            _ => Err(invalid("baseline tests have no model collection")),
        }
    }

    /// Fingerprint of the calibration and of the data route into it.
    pub fn calibration_key(&self) -> String {
        let null = if self.transform().is_some() { NullDensity::Uniform01 } else { self.null };
        let p = &self.model_params;
        let detail = match self.test {
            TestKind::Ttr => format!("{}", p.d_tr),
            TestKind::TtrCt => format!("{},{}", p.d_tr, p.d_ct),
            TestKind::Td => format!("{:?}", p.d_range),
            TestKind::Composite => format!("{:?};{:?}", p.d_range, p.policy),
            TestKind::Br | TestKind::Kl => format!("{}", self.d_of_n()),
            TestKind::Ks | TestKind::KsExp => String::new(),
        };
        let route = self.transform().map(|t| format!("F0={}", t.label())).unwrap_or_default();
        format!(
            "{}|{}{}|n={}|a={}|{}|{},{}|s={}",
            self.test.name(),
            null.label(),
            route,
            self.n,
            self.alpha,
            detail,
            self.calib.b1,
            self.calib.b2,
            self.seed
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Calibrated {
    Adaptive { table: CalibrationTable },
    Baseline { config: BaselineConfig },
}

/// A calibrated test ready to run on samples of one size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedTest {
    pub test: TestKind,
    pub key: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<NullDensity>,
    pub calibrated: Calibrated,
}

impl CalibratedTest {
    pub fn n(&self) -> usize {
        match &self.calibrated {
            Calibrated::Adaptive { table } => table.n,
            Calibrated::Baseline { config } => config.n,
        }
    }

    /// Reject or accept one sample.
    pub fn decide(&self, sample: &[f64]) -> Result<bool> {
        let transformed;
        let x = match self.transform {
            Some(null) => {
                transformed = null.transform_to_uniform(sample);
                &transformed[..]
            }
            None => sample,
        };
        match &self.calibrated {
            Calibrated::Adaptive { table } => match self.test {
                TestKind::Composite => {
                    let policy = table.scale_policy.unwrap_or_default();
                    Ok(run_composite_invariant_test(x, &table.null, &policy, table)?.reject)
                }
                _ => Ok(run_simple_test(x, &table.null, table)?.reject),
            },
            Calibrated::Baseline { config } => Ok(config.run(x)?.reject),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Run the calibration a config needs.
pub fn calibrate_for(config: &ExperimentConfig) -> Result<CalibratedTest> {
    config.validate()?;
    let transform = config.transform();
    let calib_null = if transform.is_some() { NullDensity::Uniform01 } else { config.null };
    let calibrated = match config.test {
        TestKind::Ttr | TestKind::TtrCt | TestKind::Td | TestKind::Composite => {
            let models = config.models()?;
            let stat = if config.test == TestKind::Composite {
                NullStatistic::composite_scale(calib_null, models, config.model_params.policy)
            } else {
                NullStatistic::simple(calib_null, models)
            };
            let table = calibrate(&stat, config.n, config.alpha, config.calib, DEFAULT_U_GRID_SIZE, config.seed)?;
            Calibrated::Adaptive { table }
        }
        kind => {
            let baseline = match kind {
                TestKind::Ks => BaselineKind::Ks,
                TestKind::KsExp => BaselineKind::KsExponential,
                TestKind::Br => BaselineKind::BickelRitov,
                _ => BaselineKind::KallenbergLedwina,
            };
            let budget = config.calib.b1.max(crate::baselines::MIN_BASELINE_BUDGET);
            let cfg = calibrate_baseline(baseline, &calib_null, config.n, config.d_of_n(), config.alpha, budget, config.seed)?;
            Calibrated::Baseline { config: cfg }
        }
    };
    Ok(CalibratedTest { test: config.test, key: config.calibration_key(), transform, calibrated })
}

/// Load a stored calibration for `config`, failing with the command that would produce it.
pub fn load_calibration(config: &ExperimentConfig, path: Option<&Path>) -> Result<CalibratedTest> {
    let hint = |what: &str| {
        GofError::MissingCalibration(format!(
            "{what}; run `adaptive-gof calibrate --config <config.json> --out <calib.json>` and pass `--calib <calib.json>`"
        ))
    };
    let path = path.ok_or_else(|| hint("no calibration file given"))?;
    if !path.exists() {
        return Err(hint(&format!("calibration file {} not found", path.display())));
    }
    let test = CalibratedTest::load(path)?;
    if test.key != config.calibration_key() {
        return Err(hint(&format!("calibration {} does not match this config", path.display())));
    }
    Ok(test)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub id: String,
    pub estimate: f64,
    pub std_error: f64,
    pub reps: usize,
}

impl Estimate {
    pub fn from_count(id: String, rejections: usize, reps: usize) -> Self {
        let p = rejections as f64 / reps as f64;
        Estimate { id, estimate: p, std_error: (p * (1.0 - p) / reps as f64).sqrt(), reps }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub config: ExperimentConfig,
    pub powers: Vec<Estimate>,
    pub level: Estimate,
    pub wall_clock_secs: f64,
}

impl PowerReport {
    /// CSV with header `kind,alternative,estimate,std_error,reps`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut write = || -> csv::Result<()> {
            w.write_record(["kind", "alternative", "estimate", "std_error", "reps"])?;
            for (kind, e) in self.powers.iter().map(|e| ("power", e)).chain([("level", &self.level)]) {
                w.write_record([
                    kind.to_string(),
                    e.id.clone(),
                    format!("{:.4}", e.estimate),
                    format!("{:.4}", e.std_error),
                    e.reps.to_string(),
                ])?;
            }
            Ok(w.flush()?)
        };
        write().expect("writing to memory");
        String::from_utf8(w.into_inner().expect("flushed")).expect("utf-8")
    }
}

/// Rejection count over `reps` samples drawn from `alt` with stream label `label`.
pub fn count_rejections(test: &CalibratedTest, alt: &Alternative, n: usize, reps: usize, seed: u64, label: &str) -> Result<usize> {
    let decisions: Vec<bool> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let x = alt.sample(n, &mut derive_stream(seed, label, r as u64));
            test.decide(&x)
        })
        .collect::<Result<_>>()?;
    Ok(decisions.into_iter().filter(|&d| d).count())
}

pub fn power_label(alt: &Alternative) -> String {
    format!("power:{}", alt.id())
}

pub fn level_label(null: &NullDensity) -> String {
    format!("level:{}", null.label())
}

pub fn estimate_level(config: &ExperimentConfig, test: &CalibratedTest) -> Result<Estimate> {
    let null = Alternative::Null { null: config.null };
    let k = count_rejections(test, &null, config.n, config.reps_level, config.seed, &level_label(&config.null))?;
    Ok(Estimate::from_count("null".into(), k, config.reps_level))
}

pub fn estimate_power(config: &ExperimentConfig, test: &CalibratedTest) -> Result<PowerReport> {
    config.validate()?;
    if test.key != config.calibration_key() {
        return Err(GofError::MissingCalibration(format!(
            "calibration `{}` does not match config `{}`; run `adaptive-gof calibrate` for this config",
            test.key,
            config.calibration_key()
        )));
    }
    let start = Instant::now();
    let mut powers = Vec::with_capacity(config.alternatives.len());
    for id in &config.alternatives {
        let alt: Alternative = id.parse()?;
        let k = count_rejections(test, &alt, config.n, config.reps_power, config.seed, &power_label(&alt))?;
        powers.push(Estimate::from_count(alt.id(), k, config.reps_power));
    }
    let level = estimate_level(config, test)?;
    Ok(PowerReport { config: config.clone(), powers, level, wall_clock_secs: start.elapsed().as_secs_f64() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(test: TestKind, null: NullDensity) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(test, null, 30);
        c.calib = Budgets { b1: 1000, b2: 1000 };
        c.reps_power = 200;
        c.reps_level = 400;
        c.seed = 11;
        c
    }

    #[test]
    fn config_json_defaults() {
        let c = ExperimentConfig::from_json(r#"{"test":"ttr","null":{"family":"uniform01"},"n":50}"#).unwrap();
        assert_eq!(c.reps_power, 5000);
        assert_eq!(c.reps_level, 20000);
        assert_eq!(c.calib, Budgets { b1: 20000, b2: 20000 });
        assert!(ExperimentConfig::from_json(r#"{"test":"ttr","null":{"family":"uniform01"},"n":50,"reps_power":10}"#).is_err());
    }

    #[test]
    fn missing_calibration_names_command() {
        let c = small(TestKind::Ttr, NullDensity::Uniform01);
        match load_calibration(&c, Some(Path::new("/nonexistent/calib.json"))) {
            Err(GofError::MissingCalibration(msg)) => assert!(msg.contains("adaptive-gof calibrate")),
            other => panic!("{other:?}"),
        }
        assert!(matches!(load_calibration(&c, None), Err(GofError::MissingCalibration(_))));
    }

    #[test]
    fn std_error_formula() {
        let e = Estimate::from_count("x".into(), 25, 100);
        assert!((e.std_error - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn null_as_alternative_equals_level_scale() {
        let mut c = small(TestKind::Ks, NullDensity::Uniform01);
        c.alternatives = vec!["uniform".into(), "f:0.7,4".into()];
        let t = calibrate_for(&c).unwrap();
        let r = estimate_power(&c, &t).unwrap();
        let diff = (r.powers[0].estimate - r.level.estimate).abs();
        let se = (r.powers[0].std_error.powi(2) + r.level.std_error.powi(2)).sqrt();
        assert!(diff <= 3.0 * se + 1e-12, "{r:?}");
    }
}
