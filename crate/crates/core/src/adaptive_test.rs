//! Rejection decisions for the simple and composite tests.

use serde::{Deserialize, Serialize};

use crate::calibration::{CalibrationTable, StatisticKind};
use crate::error::{GofError, Result};
use crate::estimators::{self, AffineGrid, AffineRegion, ModelIndex, ScaleSearchPolicy};
use crate::null_models::NullDensity;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelOutcome {
    pub model: ModelIndex,
    pub raw: f64,
    pub threshold: f64,
    pub exceedance: f64,
    /// Minimizing location/scale for composite statistics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub argmin: Option<Location>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    /// `max_m (raw_m - threshold_m)`.
    pub statistic: f64,
    pub reject: bool,
    pub per_model: Vec<ModelOutcome>,
    pub u_alpha_used: f64,
    /// First maximizing model in collection order, reported only on rejection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<ModelIndex>,
}

impl TestResult {
    fn assemble(table: &CalibrationTable, raws: Vec<(f64, Option<Location>)>) -> Self {
        let per_model: Vec<ModelOutcome> = table
            .models
            .iter()
            .zip(raws)
            .zip(&table.thresholds_at_u_alpha)
            .map(|((&model, (raw, argmin)), &threshold)| ModelOutcome {
                model,
                raw,
                threshold,
                exceedance: raw - threshold,
                argmin,
            })
            .collect();
        let mut statistic = f64::NEG_INFINITY;
        let mut first_max = None;
        for o in &per_model {
            if o.exceedance > statistic {
                statistic = o.exceedance;
                first_max = Some(o.model);
            }
        }
        let reject = statistic > 0.0;
        TestResult {
            statistic,
            reject,
            per_model,
            u_alpha_used: table.u_alpha,
            witness: if reject { first_max } else { None },
        }
    }
}

fn check_table(table: &CalibrationTable, n: usize, d: &NullDensity, kind: StatisticKind) -> Result<()> {
    if table.statistic_kind != kind {
        return Err(GofError::Mismatch(format!(
            "calibration table is for {:?} statistics, expected {kind:?}",
            table.statistic_kind
        )));
    }
    if table.n != n {
        return Err(GofError::Mismatch(format!(
            "calibration table was built for n = {}, sample has n = {n}",
            table.n
        )));
    }
    if table.null != *d {
        return Err(GofError::Mismatch(format!(
            "calibration table null {} differs from {}",
            table.null.label(),
            d.label()
        )));
    }
    Ok(())
}

pub fn run_simple_test(sample: &[f64], d: &NullDensity, table: &CalibrationTable) -> Result<TestResult> {
    check_table(table, sample.len(), d, StatisticKind::Simple)?;
    let raws = estimators::t_hat_collection(sample, &table.models, d)?;
    Ok(TestResult::assemble(table, raws.into_iter().map(|r| (r, None)).collect()))
}

/// Scale-family test; exactly invariant under `x -> c x`.
pub fn run_composite_invariant_test(
    sample: &[f64],
    d: &NullDensity,
    policy: &ScaleSearchPolicy,
    table: &CalibrationTable,
) -> Result<TestResult> {
    check_table(table, sample.len(), d, StatisticKind::CompositeInvariant)?;
    if table.scale_policy.unwrap_or_default() != *policy {
        return Err(GofError::Mismatch("scale search policy differs from the calibrated one".into()));
    }
    let fits = estimators::t_tilde_scale_collection(sample, &table.models, d, policy)?;
    Ok(TestResult::assemble(
        table,
        fits.into_iter()
            .map(|f| (f.value, Some(Location { mu: 0.0, sigma: f.sigma })))
            .collect(),
    ))
}

/// Location/scale test over a compact rectangle, using the simple-statistic
/// thresholds of the base null (conservative).
pub fn run_composite_compact_test(
    sample: &[f64],
    d: &NullDensity,
    region: &AffineRegion,
    grid: &AffineGrid,
    table: &CalibrationTable,
) -> Result<TestResult> {
    check_table(table, sample.len(), d, StatisticKind::Simple)?;
    let fits = estimators::t_tilde_affine_collection(sample, &table.models, d, region, grid)?;
    Ok(TestResult::assemble(
        table,
        fits.into_iter()
            .map(|f| (f.value, Some(Location { mu: f.mu, sigma: f.sigma })))
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::{calibrate, Budgets, NullStatistic};
    use crate::estimators::ModelCollection;
    use crate::stream::derive_stream;

    fn simple_table(models: ModelCollection, n: usize) -> CalibrationTable {
        let stat = NullStatistic::simple(NullDensity::Uniform01, models);
        calibrate(&stat, n, 0.05, Budgets { b1: 500, b2: 500 }, 20, 5).unwrap()
    }

    #[test]
    fn single_bin_never_rejects() {
        let table = simple_table(ModelCollection::piecewise([1]).unwrap(), 15);
        for r in 0..50 {
            let x = NullDensity::Uniform01.sample(15, &mut derive_stream(1, "t", r));
            let res = run_simple_test(&x, &NullDensity::Uniform01, &table).unwrap();
            assert!(!res.reject);
            assert_eq!(res.statistic, 0.0);
            assert!(res.witness.is_none());
        }
    }

    #[test]
    fn statistic_is_max_exceedance() {
        let models = ModelCollection::piecewise(2..=5).unwrap().union(&ModelCollection::fourier(1..=4).unwrap());
        let table = simple_table(models, 30);
        let x: Vec<f64> = (0..30).map(|i| (i as f64 / 30.0).powi(3)).collect();
        let res = run_simple_test(&x, &NullDensity::Uniform01, &table).unwrap();
        assert!(res.per_model.iter().all(|o| o.exceedance <= res.statistic));
        assert!(res.per_model.iter().any(|o| o.exceedance == res.statistic));
        assert_eq!(res.reject, res.per_model.iter().any(|o| o.exceedance > 0.0));
        assert!(res.reject);
        let w = res.witness.unwrap();
        let first = res.per_model.iter().find(|o| o.exceedance == res.statistic).unwrap();
        assert_eq!(w, first.model);
    }

    #[test]
    fn mismatches_are_errors() {
        let table = simple_table(ModelCollection::fourier([1, 2]).unwrap(), 20);
        let x = vec![0.5; 21];
        assert!(matches!(run_simple_test(&x, &NullDensity::Uniform01, &table), Err(GofError::Mismatch(_))));
        let x = vec![0.5; 20];
        assert!(matches!(run_simple_test(&x, &NullDensity::Exponential, &table), Err(GofError::Mismatch(_))));
        let policy = ScaleSearchPolicy::default();
        assert!(matches!(
            run_composite_invariant_test(&x, &NullDensity::Uniform01, &policy, &table),
            Err(GofError::Mismatch(_))
        ));
    }

    #[test]
    fn compact_point_region_matches_simple_on_standardized() {
        let table = simple_table(ModelCollection::piecewise(2..=6).unwrap(), 25);
        let x: Vec<f64> = NullDensity::Uniform01
            .sample(25, &mut derive_stream(9, "c", 0))
            .iter()
            .map(|v| 2.0 + 3.0 * v)
            .collect();
        let region = AffineRegion::point(2.0, 3.0).unwrap();
        let compact = run_composite_compact_test(&x, &NullDensity::Uniform01, &region, &AffineGrid::new(2, 2, 0), &table).unwrap();
        let z: Vec<f64> = x.iter().map(|v| (v - 2.0) / 3.0).collect();
        let simple = run_simple_test(&z, &NullDensity::Uniform01, &table).unwrap();
        assert_eq!(compact.reject, simple.reject);
        for (a, b) in compact.per_model.iter().zip(&simple.per_model) {
            approx::assert_abs_diff_eq!(a.raw, b.raw, epsilon = 1e-12);
        }
    }

    #[test]
    fn json_round_trip() {
        let table = simple_table(ModelCollection::fourier([1, 3]).unwrap(), 20);
        let x: Vec<f64> = (0..20).map(|i| i as f64 / 20.0).collect();
        let res = run_simple_test(&x, &NullDensity::Uniform01, &table).unwrap();
        let back: TestResult = serde_json::from_str(&serde_json::to_string(&res).unwrap()).unwrap();
        assert_eq!(back, res);
    }
}
