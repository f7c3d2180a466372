//! The projected-norm U-statistic and the goodness-of-fit statistics built on it.
//!
//! For a projection space `S_m` with orthonormal basis `p_l`,
//! `theta_m = 1/(n(n-1)) sum_l sum_{i != j} p_l(X_i) p_l(X_j)` is unbiased for
//! `||Pi_m f||^2`, and `T_m = theta_m + ||f0||^2 - (2/n) sum_i f0(X_i)` estimates
//! `||f - f0||^2` up to the projection error.
//!
//! All statistics are computed on a sorted copy of the sample, so results are
//! bitwise invariant under permutation of the input.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bases::{self, BasisFamily, BasisSums};
use crate::error::{invalid, GofError, Result};
use crate::null_models::NullDensity;
use crate::special::{compensated_sum, CompensatedSum};

/// One projection space: a family and its degree `D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModelIndex {
    pub family: BasisFamily,
    pub degree: u32,
}

impl ModelIndex {
    pub fn new(family: BasisFamily, degree: u32) -> Result<Self> {
        match family {
            BasisFamily::PiecewiseConstant | BasisFamily::Fourier => {}
            other => return Err(invalid(format!("{other:?} does not index a projection space"))),
        }
        if degree == 0 {
            return Err(invalid("model degree must be at least 1"));
        }
        Ok(ModelIndex { family, degree })
    }

    pub fn piecewise(degree: u32) -> Self {
        ModelIndex { family: BasisFamily::PiecewiseConstant, degree: degree.max(1) }
    }

    pub fn fourier(degree: u32) -> Self {
        ModelIndex { family: BasisFamily::Fourier, degree: degree.max(1) }
    }
}

impl fmt::Display for ModelIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            BasisFamily::PiecewiseConstant => write!(f, "pc:{}", self.degree),
            BasisFamily::Fourier => write!(f, "fourier:{}", self.degree),
            other => write!(f, "{other:?}:{}", self.degree),
        }
    }
}

/// A finite, nonempty set of models in the pinned order: piecewise constants by
/// ascending degree, then Fourier by ascending degree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ModelIndex>", into = "Vec<ModelIndex>")]
pub struct ModelCollection(Vec<ModelIndex>);

impl ModelCollection {
    pub fn new(models: impl IntoIterator<Item = ModelIndex>) -> Result<Self> {
        let mut v: Vec<ModelIndex> = models.into_iter().collect();
        for m in &v {
            ModelIndex::new(m.family, m.degree)?;
        }
        v.sort();
        v.dedup();
        if v.is_empty() {
            return Err(invalid("model collection is empty"));
        }
        Ok(ModelCollection(v))
    }

    pub fn piecewise(degrees: impl IntoIterator<Item = u32>) -> Result<Self> {
        Self::new(degrees.into_iter().map(|d| ModelIndex { family: BasisFamily::PiecewiseConstant, degree: d }))
    }

    pub fn fourier(degrees: impl IntoIterator<Item = u32>) -> Result<Self> {
        Self::new(degrees.into_iter().map(|d| ModelIndex { family: BasisFamily::Fourier, degree: d }))
    }

    pub fn union(&self, other: &ModelCollection) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Self::new(v).expect("union of nonempty collections")
    }

    pub fn models(&self) -> &[ModelIndex] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ModelIndex> {
        self.0.iter()
    }

    fn has_fourier(&self) -> bool {
        self.0.iter().any(|m| m.family == BasisFamily::Fourier)
    }
}

impl TryFrom<Vec<ModelIndex>> for ModelCollection {
    type Error = GofError;
    fn try_from(v: Vec<ModelIndex>) -> Result<Self> {
        ModelCollection::new(v)
    }
}

impl From<ModelCollection> for Vec<ModelIndex> {
    fn from(c: ModelCollection) -> Self {
        c.0
    }
}

fn check_sample(sample: &[f64]) -> Result<()> {
    if sample.len() < 2 {
        return Err(GofError::InsufficientSample { required: 2, got: sample.len() });
    }
    if let Some(x) = sample.iter().find(|x| !x.is_finite()) {
        return Err(invalid(format!("non-finite observation {x}")));
    }
    Ok(())
}

fn sorted_copy(sample: &[f64]) -> Vec<f64> {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// `theta_m` for every model, on values sorted ascending.
fn theta_sorted(sorted: &[f64], models: &[ModelIndex], upper_edge: Option<f64>) -> Result<Vec<f64>> {
    let n = sorted.len() as f64;
    let norm = n * (n - 1.0);
    let fourier_max = models
        .iter()
        .filter(|m| m.family == BasisFamily::Fourier)
        .map(|m| m.degree)
        .max();
    // Cumulative off-diagonal sums sum_{l <= D} (S_l^2 - Q_l) for each Fourier degree.
    let fourier_cum = match fourier_max {
        Some(dmax) => {
            let BasisSums::Dense { sums, squares } =
                bases::basis_sums(sorted, BasisFamily::Fourier, dmax, None)?
            else {
                unreachable!()
            };
            let mut acc = 0.0;
            sums.iter()
                .zip(&squares)
                .map(|(s, q)| {
                    acc += s * s - q;
                    acc
                })
                .collect::<Vec<f64>>()
        }
        None => Vec::new(),
    };
    models
        .iter()
        .map(|m| match m.family {
            BasisFamily::PiecewiseConstant => {
                let pairs = bases::sorted_collisions(sorted, m.degree, upper_edge);
                Ok(m.degree as f64 * pairs as f64 / norm)
            }
            BasisFamily::Fourier => Ok(fourier_cum[m.degree as usize] / norm),
            other => Err(invalid(format!("{other:?} does not index a projection space"))),
        })
        .collect()
}

/// `||f0||^2 - (2/n) sum_i f0(y_i)`, summed in slice order.
fn null_term(values: &[f64], d: &NullDensity) -> f64 {
    let mut acc = CompensatedSum::default();
    for &y in values {
        acc.add(d.pdf(y));
    }
    d.l2_norm_sq() - 2.0 * acc.value() / values.len() as f64
}

/// The unbiased estimator of `||Pi_m f||^2`.
pub fn theta_hat(sample: &[f64], m: ModelIndex) -> Result<f64> {
    check_sample(sample)?;
    Ok(theta_sorted(&sorted_copy(sample), &[m], None)?[0])
}

/// Literal double sum over `i != j`; a brute-force reference for [`theta_hat`].
pub fn theta_hat_naive(sample: &[f64], m: ModelIndex) -> Result<f64> {
    check_sample(sample)?;
    let n = sample.len();
    let mut total = 0.0;
    match m.family {
        BasisFamily::PiecewiseConstant => {
            let bins: Vec<i64> = sample
                .iter()
                .map(|&x| bases::bin_index(x, m.degree))
                .collect::<Result<_>>()?;
            let d = m.degree as f64;
            for i in 0..n {
                for j in 0..n {
                    if i != j && bins[i] == bins[j] {
                        total += d.sqrt() * d.sqrt();
                    }
                }
            }
        }
        family => {
            let values: Vec<Vec<f64>> = sample
                .iter()
                .map(|&x| {
                    (0..=m.degree as usize)
                        .map(|l| bases::dense_eval(family, l, x))
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<_>>()?;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        total += values[i].iter().zip(&values[j]).map(|(a, b)| a * b).sum::<f64>();
                    }
                }
            }
        }
    }
    Ok(total / (n as f64 * (n as f64 - 1.0)))
}

/// `T_m = theta_m + ||f0||^2 - (2/n) sum_i f0(X_i)`.
pub fn t_hat(sample: &[f64], m: ModelIndex, d: &NullDensity) -> Result<f64> {
    Ok(t_hat_collection(sample, &ModelCollection::new([m])?, d)?[0])
}

/// `T_m` for every model of the collection, in collection order.
pub fn t_hat_collection(sample: &[f64], models: &ModelCollection, d: &NullDensity) -> Result<Vec<f64>> {
    check_sample(sample)?;
    let sorted = sorted_copy(sample);
    let base = null_term(&sorted, d);
    Ok(theta_sorted(&sorted, models.models(), d.upper_edge())?
        .into_iter()
        .map(|theta| theta + base)
        .collect())
}

/// Search domain for the infimum over scale.
///
/// The grid is log-spaced on `[s/c, c s]` where `s` is the data's scale
/// reference (the sample mean for positive data), so it moves with the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleSearchPolicy {
    pub relative_span: f64,
    pub coarse_points: usize,
    pub refine_rounds: usize,
    pub refine_factor: usize,
}

impl Default for ScaleSearchPolicy {
    fn default() -> Self {
        ScaleSearchPolicy { relative_span: 10.0, coarse_points: 257, refine_rounds: 1, refine_factor: 8 }
    }
}

impl ScaleSearchPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.relative_span > 1.0 && self.relative_span.is_finite()) {
            return Err(invalid("relative_span must exceed 1"));
        }
        if self.coarse_points == 0 || self.refine_factor == 0 {
            return Err(invalid("coarse_points and refine_factor must be positive"));
        }
        Ok(())
    }

    /// Coarse grid in standardized units, as log-offsets `ln(sigma / s)`.
    pub fn coarse_log_grid(&self) -> Vec<f64> {
        let ln_c = self.relative_span.ln();
        let g = self.coarse_points;
        if g == 1 {
            return vec![0.0];
        }
        (0..g)
            .map(|i| ln_c * (2.0 * i as f64 / (g - 1) as f64 - 1.0))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleFit {
    pub value: f64,
    pub sigma: f64,
}

/// Quantum applied to standardized observations. Rescaled inputs differ from
/// the originals by a few ulps; snapping to this lattice removes the
/// difference, which makes the scale-family statistics exactly invariant.
const STANDARDIZE_QUANTUM: f64 = 4_294_967_296.0; // 2^32

/// Divide by the scale reference `mean |X_i|` and snap to a `2^-32` lattice.
///
/// Returns the standardized values sorted ascending and the reference scale.
pub fn scale_standardize(sample: &[f64]) -> Result<(Vec<f64>, f64)> {
    check_sample(sample)?;
    let reference = compensated_sum(sample.iter().map(|x| x.abs())) / sample.len() as f64;
    if !(reference > 0.0 && reference.is_finite()) {
        return Err(invalid("sample has no positive scale"));
    }
    let mut z: Vec<f64> = sample
        .iter()
        .map(|&x| (x / reference * STANDARDIZE_QUANTUM).round() / STANDARDIZE_QUANTUM)
        .collect();
    z.sort_by(f64::total_cmp);
    Ok((z, reference))
}

fn require_piecewise(models: &ModelCollection) -> Result<()> {
    if models.has_fourier() {
        return Err(invalid("location/scale searches support piecewise-constant models only"));
    }
    Ok(())
}

fn check_support(sample: &[f64], d: &NullDensity) -> Result<()> {
    if matches!(d, NullDensity::Exponential) {
        if let Some(x) = sample.iter().find(|&&x| !(x > 0.0)) {
            return Err(GofError::SupportViolation(format!(
                "observation {x} is not positive under the exponential family"
            )));
        }
    }
    Ok(())
}

#[derive(Clone, Copy)]
struct Best {
    value: f64,
    mu: f64,
    sigma: f64,
}

impl Best {
    const NONE: Best = Best { value: f64::INFINITY, mu: 0.0, sigma: f64::INFINITY };

    /// Strictly smaller value wins; ties go to smaller sigma, then smaller mu.
    fn offer(&mut self, value: f64, mu: f64, sigma: f64) -> bool {
        let better = value < self.value
            || (value == self.value && (sigma < self.sigma || (sigma == self.sigma && mu < self.mu)));
        if better {
            *self = Best { value, mu, sigma };
        }
        better
    }
}

/// Evaluates `T_m((y - mu) / sigma)` over candidate `(mu, sigma)` for every model.
struct Evaluator<'a> {
    sorted: &'a [f64],
    models: &'a [ModelIndex],
    null: &'a NullDensity,
    buf: Vec<f64>,
    norm: f64,
}

impl<'a> Evaluator<'a> {
    fn new(sorted: &'a [f64], models: &'a [ModelIndex], null: &'a NullDensity) -> Self {
        let n = sorted.len() as f64;
        Evaluator { sorted, models, null, buf: vec![0.0; sorted.len()], norm: n * (n - 1.0) }
    }

    fn transform(&mut self, mu: f64, sigma: f64) {
        for (b, &x) in self.buf.iter_mut().zip(self.sorted) {
            *b = (x - mu) / sigma;
        }
    }

    fn theta(&self, m: &ModelIndex) -> f64 {
        let pairs = bases::sorted_collisions(&self.buf, m.degree, self.null.upper_edge());
        m.degree as f64 * pairs as f64 / self.norm
    }

    /// One model at one point.
    fn single(&mut self, m: &ModelIndex, mu: f64, sigma: f64) -> f64 {
        self.transform(mu, sigma);
        self.theta(m) + null_term(&self.buf, self.null)
    }

    /// All models at one point (shares the transform and the null term).
    fn all(&mut self, mu: f64, sigma: f64, out: &mut [f64]) {
        self.transform(mu, sigma);
        let base = null_term(&self.buf, self.null);
        for (o, m) in out.iter_mut().zip(self.models) {
            *o = self.theta(m) + base;
        }
    }
}

/// Infimum of `T_m(X / sigma)` over the policy's scale grid, with refinement.
pub fn t_tilde_scale(
    sample: &[f64],
    m: ModelIndex,
    d: &NullDensity,
    policy: &ScaleSearchPolicy,
) -> Result<ScaleFit> {
    Ok(t_tilde_scale_collection(sample, &ModelCollection::new([m])?, d, policy)?[0])
}

pub fn t_tilde_scale_collection(
    sample: &[f64],
    models: &ModelCollection,
    d: &NullDensity,
    policy: &ScaleSearchPolicy,
) -> Result<Vec<ScaleFit>> {
    policy.validate()?;
    require_piecewise(models)?;
    check_sample(sample)?;
    check_support(sample, d)?;
    let (z, reference) = scale_standardize(sample)?;
    let ms = models.models();
    let mut eval = Evaluator::new(&z, ms, d);

    let grid = policy.coarse_log_grid();
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    let mut best = vec![Best::NONE; ms.len()];
    let mut best_idx = vec![0usize; ms.len()];
    let mut row = vec![0.0; ms.len()];
    for (i, &t) in grid.iter().enumerate() {
        let sigma = t.exp();
        eval.all(0.0, sigma, &mut row);
        for k in 0..ms.len() {
            if best[k].offer(row[k], 0.0, sigma) {
                best_idx[k] = i;
            }
        }
    }
    let coarse_cell = if grid.len() > 1 { grid[1] - grid[0] } else { 0.0 };
    for (k, m) in ms.iter().enumerate() {
        let mut center = grid[best_idx[k]];
        let mut cell = coarse_cell;
        for _ in 0..policy.refine_rounds {
            let step = cell / policy.refine_factor as f64;
            if step == 0.0 {
                break;
            }
            let f = policy.refine_factor as i64;
            let mut round_best = Best::NONE;
            let mut round_center = center;
            for j in -f..=f {
                let t = center + j as f64 * step;
                if j == 0 || t < lo || t > hi {
                    continue;
                }
                let sigma = t.exp();
                let v = eval.single(m, 0.0, sigma);
                if round_best.offer(v, 0.0, sigma) {
                    round_center = t;
                }
                best[k].offer(v, 0.0, sigma);
            }
            if best[k].sigma == round_best.sigma {
                center = round_center;
            }
            cell = step;
        }
    }
    Ok(best
        .into_iter()
        .map(|b| ScaleFit { value: b.value, sigma: b.sigma * reference })
        .collect())
}

/// Compact location/scale set `[mu_lo, mu_hi] x [sigma_lo, sigma_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineRegion {
    pub mu_lo: f64,
    pub mu_hi: f64,
    pub sigma_lo: f64,
    pub sigma_hi: f64,
}

impl AffineRegion {
    pub fn new(mu_lo: f64, mu_hi: f64, sigma_lo: f64, sigma_hi: f64) -> Result<Self> {
        let r = AffineRegion { mu_lo, mu_hi, sigma_lo, sigma_hi };
        r.validate()?;
        Ok(r)
    }

    pub fn point(mu: f64, sigma: f64) -> Result<Self> {
        Self::new(mu, mu, sigma, sigma)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.mu_lo, self.mu_hi, self.sigma_lo, self.sigma_hi].iter().all(|v| v.is_finite());
        if !finite || self.mu_lo > self.mu_hi || self.sigma_lo > self.sigma_hi {
            return Err(invalid("empty or inverted location/scale rectangle"));
        }
        if !(self.sigma_lo > 0.0) {
            return Err(invalid("scale lower bound must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineGrid {
    pub mu_points: usize,
    pub sigma_points: usize,
    pub refine_rounds: usize,
    pub refine_factor: usize,
}

impl AffineGrid {
    pub fn new(mu_points: usize, sigma_points: usize, refine_rounds: usize) -> Self {
        AffineGrid { mu_points, sigma_points, refine_rounds, refine_factor: 8 }
    }

    fn validate(&self) -> Result<()> {
        if self.mu_points < 2 || self.sigma_points < 2 {
            return Err(invalid("affine grid needs at least 2 points per axis"));
        }
        if self.refine_factor == 0 {
            return Err(invalid("refine_factor must be positive"));
        }
        Ok(())
    }

    /// The coarse grid nodes along each axis.
    pub fn nodes(&self, region: &AffineRegion) -> (Vec<f64>, Vec<f64>) {
        let axis = |lo: f64, hi: f64, k: usize| -> Vec<f64> {
            (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect()
        };
        (
            axis(region.mu_lo, region.mu_hi, self.mu_points),
            axis(region.sigma_lo, region.sigma_hi, self.sigma_points),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineFit {
    pub value: f64,
    pub mu: f64,
    pub sigma: f64,
}

/// Minimum of `T_m((X - mu) / sigma)` over a product grid on a compact
/// rectangle, with local refinement around the best node.
pub fn t_tilde_affine(
    sample: &[f64],
    m: ModelIndex,
    d: &NullDensity,
    region: &AffineRegion,
    grid: &AffineGrid,
) -> Result<AffineFit> {
    Ok(t_tilde_affine_collection(sample, &ModelCollection::new([m])?, d, region, grid)?[0])
}

pub fn t_tilde_affine_collection(
    sample: &[f64],
    models: &ModelCollection,
    d: &NullDensity,
    region: &AffineRegion,
    grid: &AffineGrid,
) -> Result<Vec<AffineFit>> {
    region.validate()?;
    grid.validate()?;
    require_piecewise(models)?;
    check_sample(sample)?;
    let sorted = sorted_copy(sample);
    let ms = models.models();
    let mut eval = Evaluator::new(&sorted, ms, d);
    let (mus, sigmas) = grid.nodes(region);

    let mut best = vec![Best::NONE; ms.len()];
    let mut row = vec![0.0; ms.len()];
    for &sigma in &sigmas {
        for &mu in &mus {
            eval.all(mu, sigma, &mut row);
            for k in 0..ms.len() {
                best[k].offer(row[k], mu, sigma);
            }
        }
    }
    let cell_mu = mus[1] - mus[0];
    let cell_sigma = sigmas[1] - sigmas[0];
    for (k, m) in ms.iter().enumerate() {
        let (mut c_mu, mut c_sigma) = (best[k].mu, best[k].sigma);
        let (mut h_mu, mut h_sigma) = (cell_mu, cell_sigma);
        for _ in 0..grid.refine_rounds {
            let f = grid.refine_factor as i64;
            let (s_mu, s_sigma) = (h_mu / f as f64, h_sigma / f as f64);
            if s_mu == 0.0 && s_sigma == 0.0 {
                break;
            }
            for js in -f..=f {
                let sigma = c_sigma + js as f64 * s_sigma;
                if sigma < region.sigma_lo || sigma > region.sigma_hi {
                    continue;
                }
                for jm in -f..=f {
                    let mu = c_mu + jm as f64 * s_mu;
                    if (jm == 0 && js == 0) || mu < region.mu_lo || mu > region.mu_hi {
                        continue;
                    }
                    let v = eval.single(m, mu, sigma);
                    best[k].offer(v, mu, sigma);
                }
            }
            c_mu = best[k].mu;
            c_sigma = best[k].sigma;
            h_mu = s_mu;
            h_sigma = s_sigma;
        }
    }
    Ok(best
        .into_iter()
        .map(|b| AffineFit { value: b.value, mu: b.mu, sigma: b.sigma })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::derive_stream;
    use approx::assert_abs_diff_eq;

    const PC1: ModelIndex = ModelIndex { family: BasisFamily::PiecewiseConstant, degree: 1 };
    const PC2: ModelIndex = ModelIndex { family: BasisFamily::PiecewiseConstant, degree: 2 };

    #[test]
    fn model_validation_and_order() {
        assert!(ModelIndex::new(BasisFamily::Legendre, 3).is_err());
        assert!(ModelIndex::new(BasisFamily::Fourier, 0).is_err());
        let c = ModelCollection::new([ModelIndex::fourier(2), ModelIndex::piecewise(4), ModelIndex::piecewise(2), ModelIndex::fourier(1), ModelIndex::piecewise(2)]).unwrap();
        let names: Vec<String> = c.iter().map(|m| m.to_string()).collect();
        assert_eq!(names, ["pc:2", "pc:4", "fourier:1", "fourier:2"]);
        assert!(ModelCollection::new([]).is_err());
    }

    #[test]
    fn theta_examples() {
        assert_eq!(theta_hat(&[0.1, 0.9], PC1).unwrap(), 1.0);
        assert_eq!(theta_hat(&[0.1, 0.9], PC2).unwrap(), 0.0);
        assert_abs_diff_eq!(theta_hat(&[0.1, 0.2, 0.9], PC2).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(theta_hat_naive(&[0.1, 0.2, 0.9], PC2).unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(theta_hat_naive(&[0.2, 0.7], PC2).unwrap(), 0.0);
        assert!(matches!(theta_hat(&[0.5], PC1), Err(GofError::InsufficientSample { .. })));
        assert!(theta_hat_naive(&[0.5], PC1).is_err());
    }

    #[test]
    fn t_hat_examples() {
        let u = NullDensity::Uniform01;
        assert_eq!(t_hat(&[0.1, 0.35, 0.8, 0.99], PC1, &u).unwrap(), 0.0);
        assert_eq!(t_hat(&[0.1, 0.9], PC2, &u).unwrap(), -1.0);
        assert_eq!(t_hat(&[0.1, 0.2], PC2, &u).unwrap(), 1.0);
        // Clamped upper edge: x = 1 still shares bin 1 with 0.9.
        assert_eq!(t_hat(&[0.9, 1.0], PC2, &u).unwrap(), 1.0);
    }

    #[test]
    fn collection_matches_scalar_bitwise() {
        let mut s = derive_stream(5, "est", 0);
        let xs: Vec<f64> = (0..60).map(|_| s.uniform()).collect();
        let models = ModelCollection::piecewise(2..=6).unwrap().union(&ModelCollection::fourier(1..=6).unwrap());
        let all = t_hat_collection(&xs, &models, &NullDensity::Uniform01).unwrap();
        for (m, v) in models.iter().zip(&all) {
            assert_eq!(t_hat(&xs, *m, &NullDensity::Uniform01).unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn fourier_rejects_out_of_domain() {
        assert!(theta_hat(&[0.2, 1.3], ModelIndex::fourier(2)).is_err());
    }

    #[test]
    fn scale_search_examples() {
        let mut s = derive_stream(17, "scale", 0);
        let xs = NullDensity::Exponential.sample(200, &mut s);
        let policy = ScaleSearchPolicy::default();
        let d = NullDensity::Exponential;
        for degree in [2, 5, 10] {
            let m = ModelIndex::piecewise(degree);
            let fit = t_tilde_scale(&xs, m, &d, &policy).unwrap();
            let (z, _) = scale_standardize(&xs).unwrap();
            assert!(fit.value <= t_hat(&z, m, &d).unwrap());
            assert!(fit.sigma > 0.0);
        }
        let mut bad = xs.clone();
        bad[3] = 0.0;
        assert!(matches!(
            t_tilde_scale(&bad, PC2, &d, &policy),
            Err(GofError::SupportViolation(_))
        ));
        assert!(t_tilde_scale(&xs, ModelIndex::fourier(2), &d, &policy).is_err());
    }

    #[test]
    fn affine_degenerate_region_is_a_single_candidate() {
        let mut s = derive_stream(19, "affine", 0);
        let xs = NullDensity::gaussian(0.3, 1.4).unwrap().sample(80, &mut s);
        let g = NullDensity::standard_gaussian();
        let region = AffineRegion::point(0.3, 1.4).unwrap();
        let fit = t_tilde_affine(&xs, ModelIndex::piecewise(4), &g, &region, &AffineGrid::new(3, 3, 1)).unwrap();
        let standardized: Vec<f64> = xs.iter().map(|x| (x - 0.3) / 1.4).collect();
        assert_eq!(fit.value, t_hat(&standardized, ModelIndex::piecewise(4), &g).unwrap());
        assert!(AffineRegion::new(1.0, 0.0, 0.5, 1.0).is_err());
        assert!(AffineRegion::new(0.0, 1.0, 0.0, 1.0).is_err());
        assert!(AffineRegion::new(0.0, 1.0, 2.0, 1.0).is_err());
    }
}
