//! Competitor tests: Kolmogorov-Smirnov (simple and exponential with an
//! estimated scale), Bickel-Ritov, and the Kallenberg-Ledwina data-driven
//! Neyman test.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bases::{legendre_values, MAX_LEGENDRE_DEGREE};
use crate::calibration::order_statistic_threshold;
use crate::error::{invalid, GofError, Result};
use crate::estimators::scale_standardize;
use crate::null_models::NullDensity;
use crate::special::CompensatedSum;
use crate::stream::derive_stream;

pub const MIN_BASELINE_BUDGET: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Ks,
    KsExponential,
    BickelRitov,
    KallenbergLedwina,
}

impl BaselineKind {
    /// Null distribution used to calibrate the critical value.
    pub fn calibration_null(self) -> NullDensity {
        match self {
            BaselineKind::KsExponential => NullDensity::Exponential,
            _ => NullDensity::Uniform01,
        }
    }
}

/// Maximal dimension for the BR and KL statistics: 10 at n = 50, 12 at n = 100.
///
/// Other sample sizes interpolate linearly in n between those anchors and are
/// clamped to `[2, MAX_LEGENDRE_DEGREE]`.
pub fn default_d_of_n(n: usize) -> usize {
    match n {
        50 => 10,
        100 => 12,
        _ => ((10.0 + (n as f64 - 50.0) / 25.0).round() as i64).clamp(2, MAX_LEGENDRE_DEGREE as i64) as usize,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub kind: BaselineKind,
    /// Null density for the plain KS test; the other kinds fix their own.
    pub null: NullDensity,
    pub n: usize,
    pub d_of_n: usize,
    pub alpha: f64,
    pub critical_value: f64,
    pub budget: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineOutcome {
    pub statistic: f64,
    pub reject: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_dimension: Option<usize>,
}

fn check_nonempty(sample: &[f64]) -> Result<()> {
    if sample.is_empty() {
        return Err(GofError::InsufficientSample { required: 1, got: 0 });
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(invalid("sample contains a non-finite value"));
    }
    Ok(())
}

fn check_unit_sample(sample: &[f64]) -> Result<()> {
    check_nonempty(sample)?;
    match sample.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        Some(x) => Err(invalid(format!("observation {x} outside [0, 1]"))),
        None => Ok(()),
    }
}

fn sorted(sample: &[f64]) -> Vec<f64> {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// KS distance of an ascending sample to a cdf, via order statistics.
fn ks_sorted(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

pub fn ks_statistic(sample: &[f64], d: &NullDensity) -> Result<f64> {
    check_nonempty(sample)?;
    Ok(ks_sorted(&sorted(sample), |x| d.cdf(x)))
}

/// `sup |F_n(t) - (1 - exp(-t / mean))|`.
///
/// Computed on the scale-standardized sample, so `statistic(c X)` equals
/// `statistic(X)` exactly for every `c > 0`.
pub fn ks_exponential_statistic(sample: &[f64]) -> Result<f64> {
    check_nonempty(sample)?;
    if let Some(x) = sample.iter().find(|&&x| !(x > 0.0)) {
        return Err(GofError::SupportViolation(format!("observation {x} is not positive")));
    }
    let (z, _) = scale_standardize(sample)?;
    Ok(ks_sorted(&z, |t| -(-t).exp_m1()))
}

/// `T_{n,D} = (2/n) sum_l (sum_i cos(l pi X_i))^2` for `D = 1..=d`.
pub fn bickel_ritov_components(sample: &[f64], d: usize) -> Result<Vec<f64>> {
    check_unit_sample(sample)?;
    if d == 0 {
        return Err(invalid("d_of_n must be positive"));
    }
    let n = sample.len() as f64;
    let mut sums = vec![CompensatedSum::default(); d];
    for &x in sample {
        for (l, s) in sums.iter_mut().enumerate() {
            s.add(((l + 1) as f64 * PI * x).cos());
        }
    }
    let mut acc = 0.0;
    Ok(sums
        .iter()
        .map(|s| {
            acc += 2.0 * s.value() * s.value() / n;
            acc
        })
        .collect())
}

/// `max_{1 <= D <= d} (T_{n,D} - D) / sqrt(2 D)`.
pub fn bickel_ritov_statistic(sample: &[f64], d: usize) -> Result<f64> {
    Ok(bickel_ritov_components(sample, d)?
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let dim = (k + 1) as f64;
            (t - dim) / (2.0 * dim).sqrt()
        })
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `T_D = sum_{l <= D} (n^{-1/2} sum_i phi_l(X_i))^2` with orthonormal Legendre `phi_l`.
pub fn neyman_components(sample: &[f64], d: usize) -> Result<Vec<f64>> {
    check_unit_sample(sample)?;
    if d == 0 || d > MAX_LEGENDRE_DEGREE {
        return Err(GofError::UnsupportedDegree { degree: d, max: MAX_LEGENDRE_DEGREE });
    }
    let n = sample.len() as f64;
    let mut sums = vec![CompensatedSum::default(); d + 1];
    let mut buf = [0.0; MAX_LEGENDRE_DEGREE + 1];
    for &x in sample {
        legendre_values(x, d, &mut buf);
        for (s, &v) in sums.iter_mut().zip(&buf[..=d]) {
            s.add(v);
        }
    }
    let mut acc = 0.0;
    Ok(sums[1..]
        .iter()
        .map(|s| {
            acc += s.value() * s.value() / n;
            acc
        })
        .collect())
}

/// Schwarz selection: `D_hat` is the smallest maximizer of `T_D - D log n`.
/// Returns `(D_hat, T_{D_hat})`.
pub fn kallenberg_ledwina_statistic(sample: &[f64], d: usize) -> Result<(usize, f64)> {
    let t = neyman_components(sample, d)?;
    let log_n = (sample.len() as f64).ln();
    let mut best = (1, t[0], t[0] - log_n);
    for (k, &tk) in t.iter().enumerate().skip(1) {
        let dim = k + 1;
        let crit = tk - dim as f64 * log_n;
        if crit > best.2 {
            best = (dim, tk, crit);
        }
    }
    Ok((best.0, best.1))
}

/// Returns `(D_hat, T_{D_hat}, reject)`.
pub fn kallenberg_ledwina_test(sample: &[f64], d: usize, critical_value: f64) -> Result<(usize, f64, bool)> {
    let (dim, t) = kallenberg_ledwina_statistic(sample, d)?;
    Ok((dim, t, t > critical_value))
}

/// Statistic of a baseline on one sample. `null` is used by plain KS only.
pub fn baseline_statistic(kind: BaselineKind, sample: &[f64], null: &NullDensity, d: usize) -> Result<(f64, Option<usize>)> {
    match kind {
        BaselineKind::Ks => Ok((ks_statistic(sample, null)?, None)),
        BaselineKind::KsExponential => Ok((ks_exponential_statistic(sample)?, None)),
        BaselineKind::BickelRitov => Ok((bickel_ritov_statistic(sample, d)?, None)),
        BaselineKind::KallenbergLedwina => {
            let (dim, t) = kallenberg_ledwina_statistic(sample, d)?;
            Ok((t, Some(dim)))
        }
    }
}

/// Monte Carlo critical value: order statistic of rank `ceil((1 - alpha) B)`
/// under the kind's calibration null (under `null` itself for plain KS).
pub fn calibrate_baseline(
    kind: BaselineKind,
    null: &NullDensity,
    n: usize,
    d: usize,
    alpha: f64,
    budget: usize,
    seed: u64,
) -> Result<BaselineConfig> {
    if budget < MIN_BASELINE_BUDGET {
        return Err(GofError::BudgetTooSmall { got: budget, min: MIN_BASELINE_BUDGET });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    let sim_null = if kind == BaselineKind::Ks { *null } else { kind.calibration_null() };
    let label = format!("baseline:{kind:?}");
    let mut stats: Vec<f64> = (0..budget)
        .into_par_iter()
        .map(|r| {
            let x = sim_null.sample(n, &mut derive_stream(seed, &label, r as u64));
            baseline_statistic(kind, &x, &sim_null, d).map(|s| s.0)
        })
        .collect::<Result<_>>()?;
    stats.sort_by(f64::total_cmp);
    Ok(BaselineConfig {
        kind,
        null: sim_null,
        n,
        d_of_n: d,
        alpha,
        critical_value: order_statistic_threshold(&stats, alpha),
        budget,
        seed,
    })
}

impl BaselineConfig {
    pub fn run(&self, sample: &[f64]) -> Result<BaselineOutcome> {
        if sample.len() != self.n {
            return Err(GofError::Mismatch(format!(
                "critical value was calibrated for n = {}, sample has n = {}",
                self.n,
                sample.len()
            )));
        }
        let (statistic, selected_dimension) = baseline_statistic(self.kind, sample, &self.null, self.d_of_n)?;
        Ok(BaselineOutcome { statistic, reject: statistic > self.critical_value, selected_dimension })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ks_examples() {
        assert_eq!(ks_statistic(&[0.5], &NullDensity::Uniform01).unwrap(), 0.5);
        assert_eq!(ks_statistic(&[0.75, 0.25], &NullDensity::Uniform01).unwrap(), 0.25);
        assert_abs_diff_eq!(ks_exponential_statistic(&[1.0, 1.0]).unwrap(), 1.0 - (-1f64).exp(), epsilon = 1e-15);
        assert!(matches!(ks_exponential_statistic(&[1.0, 0.0]), Err(GofError::SupportViolation(_))));
    }

    #[test]
    fn ks_exponential_scale_invariant() {
        let x: Vec<f64> = (1..40).map(|i| (i as f64 * 0.37).sin().abs() + 0.01).collect();
        let base = ks_exponential_statistic(&x).unwrap();
        for c in [0.1, 3.0, 7.0, 100.0] {
            let y: Vec<f64> = x.iter().map(|v| v * c).collect();
            assert_eq!(ks_exponential_statistic(&y).unwrap(), base);
        }
    }

    #[test]
    fn br_point_mass_at_zero() {
        assert_abs_diff_eq!(bickel_ritov_statistic(&[0.0], 12).unwrap(), 6f64.sqrt(), epsilon = 1e-12);
        assert!(bickel_ritov_statistic(&[1.5], 3).is_err());
    }

    #[test]
    fn kl_constant_half() {
        for n in [2usize, 5, 50] {
            let x = vec![0.5; n];
            let t = neyman_components(&x, 4).unwrap();
            assert_abs_diff_eq!(t[0], 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(t[1], 5.0 * n as f64 / 4.0, epsilon = 1e-9);
            assert!(t.windows(2).all(|w| w[0] <= w[1]));
            let (dim, _) = kallenberg_ledwina_statistic(&x, 2).unwrap();
            assert_eq!(dim, 2);
        }
        assert!(neyman_components(&[0.5], 21).is_err());
    }

    #[test]
    fn d_of_n_defaults() {
        assert_eq!(default_d_of_n(50), 10);
        assert_eq!(default_d_of_n(100), 12);
        assert!((2..=MAX_LEGENDRE_DEGREE).contains(&default_d_of_n(5000)));
    }

    #[test]
    fn calibration_budget_and_determinism() {
        assert!(matches!(
            calibrate_baseline(BaselineKind::Ks, &NullDensity::Uniform01, 20, 0, 0.05, 999, 1),
            Err(GofError::BudgetTooSmall { .. })
        ));
        let a = calibrate_baseline(BaselineKind::BickelRitov, &NullDensity::Uniform01, 20, 5, 0.05, 1000, 4).unwrap();
        let b = calibrate_baseline(BaselineKind::BickelRitov, &NullDensity::Uniform01, 20, 5, 0.05, 1000, 4).unwrap();
        assert_eq!(a, b);
    }
}
