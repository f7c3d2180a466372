//! Two-stage Monte Carlo calibration.
//!
//! Stage one simulates `B1` null samples and takes, for every model `m` and
//! every `u` on a regular grid of `(0, alpha]`, the order statistic
//! `t_m(u)` of rank `ceil((1 - u) B1)`. Stage two simulates `B2` fresh null
//! samples and estimates the level of the supremum test
//! `max_m (stat_m - t_m(u)) > 0` for every `u` on the same replicates; `u_alpha`
//! is the largest grid point whose level does not exceed `alpha`.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, GofError, Result};
use crate::estimators::{self, ModelCollection, ScaleSearchPolicy};
use crate::null_models::NullDensity;
use crate::stream::derive_stream;

pub const SCHEMA_VERSION: u32 = 1;

pub const MIN_BUDGET: usize = 100;

pub const DEFAULT_BUDGET: usize = 20_000;

pub const DEFAULT_U_GRID_SIZE: usize = 100;

const THRESHOLD_LABEL: &str = "calibrate:thresholds";
const LEVEL_LABEL: &str = "calibrate:level";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    /// `T_m` against a fixed null.
    Simple,
    /// The scale-infimum statistic, exactly invariant under rescaling.
    CompositeInvariant,
}

/// The per-model statistic vector computed on each simulated null sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullStatistic {
    pub null: NullDensity,
    pub models: ModelCollection,
    pub kind: StatisticKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale_policy: Option<ScaleSearchPolicy>,
}

impl NullStatistic {
    pub fn simple(null: NullDensity, models: ModelCollection) -> Self {
        NullStatistic { null, models, kind: StatisticKind::Simple, scale_policy: None }
    }

    pub fn composite_scale(null: NullDensity, models: ModelCollection, policy: ScaleSearchPolicy) -> Self {
        NullStatistic { null, models, kind: StatisticKind::CompositeInvariant, scale_policy: Some(policy) }
    }

    pub fn evaluate(&self, sample: &[f64]) -> Result<Vec<f64>> {
        match self.kind {
            StatisticKind::Simple => estimators::t_hat_collection(sample, &self.models, &self.null),
            StatisticKind::CompositeInvariant => {
                let policy = self.scale_policy.unwrap_or_default();
                Ok(estimators::t_tilde_scale_collection(sample, &self.models, &self.null, &policy)?
                    .into_iter()
                    .map(|fit| fit.value)
                    .collect())
            }
        }
    }
}

/// Simulate `reps` null samples of size `n` and evaluate the statistic on each.
///
/// Replicate `r` uses the stream `(seed, label, r)`, so the output does not
/// depend on the number of worker threads.
pub fn simulate_statistics(
    stat: &NullStatistic,
    n: usize,
    reps: usize,
    seed: u64,
    label: &str,
) -> Result<Vec<Vec<f64>>> {
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut stream = derive_stream(seed, label, r as u64);
            let sample = stat.null.sample(n, &mut stream);
            stat.evaluate(&sample)
        })
        .collect()
}

/// `{j alpha / size : j = 1..=size}`.
pub fn regular_u_grid(alpha: f64, size: usize) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    if size == 0 {
        return Err(invalid("u grid needs at least one point"));
    }
    Ok((1..=size).map(|j| j as f64 * alpha / size as f64).collect())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("alpha = {alpha} must lie in (0, 1)")))
    }
}

fn check_grid(u_grid: &[f64]) -> Result<()> {
    if u_grid.is_empty() {
        return Err(invalid("u grid is empty"));
    }
    if u_grid.iter().any(|&u| !(u > 0.0 && u < 1.0)) || u_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("u grid must be strictly increasing inside (0, 1)"));
    }
    Ok(())
}

/// 1-indexed rank `ceil((1 - u) B)` of the `(1 - u)` quantile, clamped to `[1, B]`.
///
/// A `1e-9` slack keeps products like `0.75 * 4` from rounding up a rank.
pub fn quantile_rank(u: f64, budget: usize) -> usize {
    let r = ((1.0 - u) * budget as f64 - 1e-9).ceil();
    (r.max(1.0) as usize).min(budget)
}

/// Upper order statistic of an ascending slice at rank `ceil((1 - u) B)`.
pub fn order_statistic_threshold(sorted: &[f64], u: f64) -> f64 {
    sorted[quantile_rank(u, sorted.len()) - 1]
}

/// Per-model thresholds `t_m(u)`, row-major by model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdMatrix {
    pub models: usize,
    pub grid: usize,
    pub values: Vec<f64>,
}

impl ThresholdMatrix {
    pub fn get(&self, model: usize, u_index: usize) -> f64 {
        self.values[model * self.grid + u_index]
    }

    pub fn row(&self, model: usize) -> &[f64] {
        &self.values[model * self.grid..(model + 1) * self.grid]
    }

    pub fn column(&self, u_index: usize) -> Vec<f64> {
        (0..self.models).map(|m| self.get(m, u_index)).collect()
    }
}

/// Thresholds from already simulated statistics (`stats[r][m]`).
pub fn thresholds_from_statistics(stats: &[Vec<f64>], models: usize, u_grid: &[f64]) -> ThresholdMatrix {
    let mut values = Vec::with_capacity(models * u_grid.len());
    for m in 0..models {
        let mut column: Vec<f64> = stats.iter().map(|row| row[m]).collect();
        column.sort_by(f64::total_cmp);
        values.extend(u_grid.iter().map(|&u| order_statistic_threshold(&column, u)));
    }
    ThresholdMatrix { models, grid: u_grid.len(), values }
}

pub fn estimate_thresholds(
    stat: &NullStatistic,
    n: usize,
    b1: usize,
    u_grid: &[f64],
    seed: u64,
) -> Result<ThresholdMatrix> {
    if b1 < MIN_BUDGET {
        return Err(GofError::BudgetTooSmall { got: b1, min: MIN_BUDGET });
    }
    check_grid(u_grid)?;
    let stats = simulate_statistics(stat, n, b1, seed, THRESHOLD_LABEL)?;
    let t = thresholds_from_statistics(&stats, stat.models.len(), u_grid);
    debug_assert!((0..t.models).all(|m| t.row(m).windows(2).all(|w| w[0] >= w[1])));
    Ok(t)
}

/// Level of the supremum test at every grid `u`, on shared replicates.
///
/// Thresholds are nonincreasing in `u`, so a replicate that rejects at `u_j`
/// rejects at every larger grid point; each replicate contributes from the
/// first index at which some model exceeds its threshold.
pub fn level_curve(stats: &[Vec<f64>], thresholds: &ThresholdMatrix) -> Vec<f64> {
    let grid = thresholds.grid;
    let mut first = vec![0usize; grid + 1];
    for row in stats {
        let mut earliest = grid;
        for (m, &s) in row.iter().enumerate() {
            // First j with t_m(u_j) < s; the row is nonincreasing.
            let j = thresholds.row(m).partition_point(|&t| t >= s);
            earliest = earliest.min(j);
        }
        first[earliest] += 1;
    }
    let total = stats.len() as f64;
    let mut acc = 0usize;
    (0..grid)
        .map(|j| {
            acc += first[j];
            acc as f64 / total
        })
        .collect()
}

/// Index of the largest `u` whose level is at most `alpha`.
pub fn select_from_level_curve(curve: &[f64], alpha: f64) -> Result<usize> {
    match curve.iter().rposition(|&level| level <= alpha) {
        Some(j) if curve[..=j].iter().all(|&l| l <= alpha) => Ok(j),
        _ => Err(GofError::CalibrationFailure {
            alpha,
            smallest_level: curve.first().copied().unwrap_or(f64::NAN),
            level_curve: curve.to_vec(),
        }),
    }
}

/// Simulate the second batch and pick `u_alpha`. Returns `(u_alpha, level curve)`.
#[allow(clippy::too_many_arguments)]
pub fn select_u_alpha(
    stat: &NullStatistic,
    n: usize,
    b2: usize,
    thresholds: &ThresholdMatrix,
    u_grid: &[f64],
    alpha: f64,
    seed: u64,
) -> Result<(f64, Vec<f64>)> {
    check_alpha(alpha)?;
    check_grid(u_grid)?;
    if b2 < MIN_BUDGET {
        return Err(GofError::BudgetTooSmall { got: b2, min: MIN_BUDGET });
    }
    if thresholds.grid != u_grid.len() || thresholds.models != stat.models.len() {
        return Err(GofError::Mismatch("threshold matrix does not match the grid/models".into()));
    }
    let stats = simulate_statistics(stat, n, b2, seed, LEVEL_LABEL)?;
    let curve = level_curve(&stats, thresholds);
    debug_assert!(curve.windows(2).all(|w| w[0] <= w[1]));
    let j = select_from_level_curve(&curve, alpha)?;
    Ok((u_grid[j], curve))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budgets {
    pub b1: usize,
    pub b2: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets { b1: DEFAULT_BUDGET, b2: DEFAULT_BUDGET }
    }
}

/// Calibrated thresholds with full provenance. Serialized as versioned JSON;
/// `thresholds` is row-major with one row per model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTable {
    pub schema_version: u32,
    pub statistic_kind: StatisticKind,
    pub null: NullDensity,
    pub models: ModelCollection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale_policy: Option<ScaleSearchPolicy>,
    pub n: usize,
    pub alpha: f64,
    pub u_grid: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub level_curve: Vec<f64>,
    pub u_alpha: f64,
    pub thresholds_at_u_alpha: Vec<f64>,
    pub budgets: Budgets,
    pub seed: u64,
    pub quantile_rule: String,
}

impl CalibrationTable {
    pub fn statistic(&self) -> NullStatistic {
        NullStatistic {
            null: self.null,
            models: self.models.clone(),
            kind: self.statistic_kind,
            scale_policy: self.scale_policy,
        }
    }

    pub fn threshold_matrix(&self) -> ThresholdMatrix {
        ThresholdMatrix { models: self.models.len(), grid: self.u_grid.len(), values: self.thresholds.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(GofError::Mismatch(format!(
                "calibration schema version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let (m, g) = (self.models.len(), self.u_grid.len());
        if self.thresholds.len() != m * g || self.thresholds_at_u_alpha.len() != m || self.level_curve.len() != g {
            return Err(invalid("calibration table arrays have inconsistent lengths"));
        }
        if !self.u_grid.contains(&self.u_alpha) {
            return Err(invalid("u_alpha is not a grid point"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let table: CalibrationTable = serde_json::from_str(text)?;
        table.validate()?;
        Ok(table)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Full two-stage calibration on `u_grid = {j alpha / u_grid_size}`.
pub fn calibrate(
    stat: &NullStatistic,
    n: usize,
    alpha: f64,
    budgets: Budgets,
    u_grid_size: usize,
    seed: u64,
) -> Result<CalibrationTable> {
    check_alpha(alpha)?;
    let u_grid = regular_u_grid(alpha, u_grid_size)?;
    let thresholds = estimate_thresholds(stat, n, budgets.b1, &u_grid, seed)?;
    let (u_alpha, curve) = select_u_alpha(stat, n, budgets.b2, &thresholds, &u_grid, alpha, seed)?;
    let j = u_grid.iter().position(|&u| u == u_alpha).expect("u_alpha on grid");
    Ok(CalibrationTable {
        schema_version: SCHEMA_VERSION,
        statistic_kind: stat.kind,
        null: stat.null,
        models: stat.models.clone(),
        scale_policy: stat.scale_policy,
        n,
        alpha,
        thresholds_at_u_alpha: thresholds.column(j),
        thresholds: thresholds.values,
        level_curve: curve,
        u_alpha,
        u_grid,
        budgets,
        seed,
        quantile_rule: "order statistic of rank ceil((1-u)B), no interpolation".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::ModelIndex;

    #[test]
    fn rank_rule_by_hand() {
        assert_eq!(quantile_rank(0.25, 4), 3);
        assert_eq!(order_statistic_threshold(&[1.0, 2.0, 3.0, 4.0], 0.25), 3.0);
        assert_eq!(quantile_rank(0.05, 20_000), 19_000);
        assert_eq!(quantile_rank(0.0005, 20_000), 19_990);
        assert_eq!(quantile_rank(0.999_999, 10), 1);
    }

    #[test]
    fn selection_rule() {
        let curve = [0.010, 0.030, 0.050, 0.070];
        let grid = [0.0125, 0.025, 0.0375, 0.05];
        assert_eq!(grid[select_from_level_curve(&curve, 0.05).unwrap()], 0.0375);
        match select_from_level_curve(&[0.06, 0.07], 0.05) {
            Err(GofError::CalibrationFailure { level_curve, .. }) => assert_eq!(level_curve, vec![0.06, 0.07]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_single_bin_model() {
        let stat = NullStatistic::simple(NullDensity::Uniform01, ModelCollection::new([ModelIndex::piecewise(1)]).unwrap());
        let table = calibrate(&stat, 20, 0.05, Budgets { b1: 200, b2: 200 }, 10, 3).unwrap();
        assert!(table.thresholds.iter().all(|&t| t == 0.0));
        assert!(table.level_curve.iter().all(|&l| l == 0.0));
        assert_eq!(table.u_alpha, *table.u_grid.last().unwrap());
    }

    #[test]
    fn budget_and_alpha_errors() {
        let stat = NullStatistic::simple(NullDensity::Uniform01, ModelCollection::fourier(1..=2).unwrap());
        let grid = regular_u_grid(0.05, 10).unwrap();
        assert!(matches!(estimate_thresholds(&stat, 20, 99, &grid, 1), Err(GofError::BudgetTooSmall { .. })));
        assert!(calibrate(&stat, 20, 0.0, Budgets::default(), 10, 1).is_err());
        assert!(calibrate(&stat, 20, 1.0, Budgets::default(), 10, 1).is_err());
        assert!(estimate_thresholds(&stat, 20, 100, &[0.02, 0.01], 1).is_err());
    }

    #[test]
    fn monotone_thresholds_and_levels_and_determinism() {
        let models = ModelCollection::piecewise(2..=4).unwrap().union(&ModelCollection::fourier(1..=3).unwrap());
        let stat = NullStatistic::simple(NullDensity::Uniform01, models);
        let a = calibrate(&stat, 30, 0.05, Budgets { b1: 2000, b2: 2000 }, 50, 77).unwrap();
        let t = a.threshold_matrix();
        for m in 0..t.models {
            assert!(t.row(m).windows(2).all(|w| w[0] >= w[1]));
        }
        assert!(a.level_curve.windows(2).all(|w| w[0] <= w[1]));
        let j = a.u_grid.iter().position(|&u| u == a.u_alpha).unwrap();
        assert!(a.level_curve[j] <= 0.05);
        let b = calibrate(&stat, 30, 0.05, Budgets { b1: 2000, b2: 2000 }, 50, 77).unwrap();
        assert_eq!(a, b);
        let round = CalibrationTable::from_json(&a.to_json().unwrap()).unwrap();
        assert_eq!(round, a);
    }

    #[test]
    fn json_rejects_wrong_version() {
        let stat = NullStatistic::simple(NullDensity::Uniform01, ModelCollection::fourier(1..=1).unwrap());
        let mut t = calibrate(&stat, 10, 0.05, Budgets { b1: 100, b2: 100 }, 5, 1).unwrap();
        t.schema_version = 99;
        let text = serde_json::to_string(&t).unwrap();
        assert!(matches!(CalibrationTable::from_json(&text), Err(GofError::Mismatch(_))));
    }
}
