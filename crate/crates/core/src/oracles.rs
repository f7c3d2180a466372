//! Literal, slow reference implementations used by the self-check and the
//! test suite. Each one follows the defining formula directly and shares no
//! code path with the fast statistic it checks.

use std::f64::consts::PI;

use crate::baselines::{bickel_ritov_statistic, ks_exponential_statistic, ks_statistic, neyman_components};
use crate::error::Result;
use crate::estimators::{theta_hat, theta_hat_naive, ModelIndex};
use crate::null_models::NullDensity;
use crate::stream::derive_stream;

/// `(1/n) sum_l sum_{i,j} 2 cos(l pi X_i) cos(l pi X_j)`, then the max over `D`.
pub fn bickel_ritov_triple_loop(sample: &[f64], d: usize) -> f64 {
    let n = sample.len() as f64;
    let mut best = f64::NEG_INFINITY;
    let mut t = 0.0;
    for l in 1..=d {
        let lf = l as f64;
        for &xi in sample {
            for &xj in sample {
                t += 2.0 * (lf * PI * xi).cos() * (lf * PI * xj).cos() / n;
            }
        }
        best = best.max((t - lf) / (2.0 * lf).sqrt());
    }
    best
}

/// `C(l, k)` as a float.
fn binomial(l: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (l - i) as f64 / (i + 1) as f64)
}

/// Orthonormal Legendre polynomial on `[0, 1]` from the explicit sum
/// `P_l(t) = sum_k C(l,k)^2 ((t-1)/2)^(l-k) ((t+1)/2)^k`, `t = 2x - 1`.
pub fn legendre_explicit(l: usize, x: f64) -> f64 {
    let t = 2.0 * x - 1.0;
    let (a, b) = ((t - 1.0) / 2.0, (t + 1.0) / 2.0);
    let p: f64 = (0..=l)
        .map(|k| binomial(l, k).powi(2) * a.powi((l - k) as i32) * b.powi(k as i32))
        .sum();
    (2.0 * l as f64 + 1.0).sqrt() * p
}

/// `T_D` for `D = 1..=d` from per-term Legendre sums.
pub fn neyman_direct(sample: &[f64], d: usize) -> Vec<f64> {
    let n = sample.len() as f64;
    let mut acc = 0.0;
    (1..=d)
        .map(|l| {
            let s: f64 = sample.iter().map(|&x| legendre_explicit(l, x)).sum();
            acc += s * s / n;
            acc
        })
        .collect()
}

/// `sup_t |F_n(t) - F(t)|` by direct counting, evaluated on a regular grid of
/// `points` nodes over `[lo, hi]` plus the observations themselves (both
/// one-sided limits), which is where the supremum is attained.
pub fn ks_grid(sample: &[f64], d: &NullDensity, lo: f64, hi: f64, points: usize) -> f64 {
    let n = sample.len() as f64;
    let at_most = |t: f64| sample.iter().filter(|&&x| x <= t).count() as f64 / n;
    let below = |t: f64| sample.iter().filter(|&&x| x < t).count() as f64 / n;
    let mut best: f64 = 0.0;
    for i in 0..points {
        let t = lo + (hi - lo) * i as f64 / (points - 1) as f64;
        best = best.max((at_most(t) - d.cdf(t)).abs());
    }
    for &x in sample {
        let f = d.cdf(x);
        best = best.max((at_most(x) - f).abs()).max((below(x) - f).abs());
    }
    best
}

/// Exponential-fit KS distance by direct counting against `1 - exp(-t / mean)`.
pub fn ks_exponential_grid(sample: &[f64], points: usize) -> f64 {
    let mean = sample.iter().sum::<f64>() / sample.len() as f64;
    let z: Vec<f64> = sample.iter().map(|x| x / mean).collect();
    let hi = z.iter().cloned().fold(0.0, f64::max) * 1.5;
    ks_grid(&z, &NullDensity::Exponential, 0.0, hi, points)
}

/// Outcome of one oracle-equivalence check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub cases: usize,
    pub worst: f64,
    pub tolerance: f64,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Compare every fast statistic with its literal oracle on `cases` random inputs.
pub fn run_selfcheck(cases: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut theta = 0.0f64;
    let mut br = 0.0f64;
    let mut kl = 0.0f64;
    let mut ks = 0.0f64;
    for c in 0..cases {
        let mut s = derive_stream(seed, "selfcheck", c as u64);
        let n = 2 + (s.next_u64() % 49) as usize;
        let degree = 1 + (s.next_u64() % 16) as u32;
        let x: Vec<f64> = (0..n).map(|_| s.uniform()).collect();
        for m in [ModelIndex::piecewise(degree), ModelIndex::fourier(degree)] {
            theta = theta.max(relative(theta_hat(&x, m)?, theta_hat_naive(&x, m)?));
        }
        let small = &x[..n.min(30)];
        let d = 1 + (s.next_u64() % 12) as usize;
        br = br.max(relative(bickel_ritov_statistic(small, d)?, bickel_ritov_triple_loop(small, d)));
        for (a, b) in neyman_components(&x, d)?.iter().zip(neyman_direct(&x, d)) {
            kl = kl.max(relative(*a, b));
        }
        if c % 10 == 0 {
            ks = ks.max((ks_statistic(&x, &NullDensity::Uniform01)? - ks_grid(&x, &NullDensity::Uniform01, 0.0, 1.0, 2001)).abs());
            let y: Vec<f64> = x.iter().map(|v| v + 0.01).collect();
            ks = ks.max((ks_exponential_statistic(&y)? - ks_exponential_grid(&y, 2001)).abs());
        }
    }
    Ok(vec![
        CheckOutcome { name: "theta_hat vs double sum", cases, worst: theta, tolerance: 1e-10 },
        CheckOutcome { name: "bickel_ritov vs triple loop", cases, worst: br, tolerance: 1e-10 },
        CheckOutcome { name: "neyman T_D vs explicit Legendre", cases, worst: kl, tolerance: 1e-10 },
        CheckOutcome { name: "ks vs direct counting", cases: cases.div_ceil(10) * 2, worst: ks, tolerance: 1e-6 },
    ])
}
