use adaptive_gof::adaptive_test::run_composite_compact_test;
use adaptive_gof::alternatives::Alternative;
use adaptive_gof::calibration::{calibrate, Budgets, NullStatistic};
use adaptive_gof::estimators::{t_hat, t_tilde_affine, AffineGrid, AffineRegion, ModelCollection, ModelIndex};
use adaptive_gof::null_models::NullDensity;
use adaptive_gof::stream::derive_stream;
use rayon::prelude::*;

fn value_at(x: &[f64], m: ModelIndex, d: &NullDensity, mu: f64, sigma: f64) -> f64 {
    let y: Vec<f64> = x.iter().map(|v| (v - mu) / sigma).collect();
    t_hat(&y, m, d).unwrap()
}

#[test]
fn refined_grid_agrees_with_a_dense_grid() {
    let g = NullDensity::standard_gaussian();
    let region = AffineRegion::new(-1.0, 1.0, 0.5, 2.0).unwrap();
    let (coarse_mu, coarse_sigma) = (21usize, 21usize);
    let grid = AffineGrid::new(coarse_mu, coarse_sigma, 2);
    let dense = 400usize;
    let step = |lo: f64, hi: f64, k: usize, i: usize| lo + (hi - lo) * i as f64 / (k - 1) as f64;
    for (r, degree) in [(0u64, 3u32), (1, 6)] {
        let x: Vec<f64> = g.sample(200, &mut derive_stream(71, "affine", r)).iter().map(|v| 0.3 + 1.2 * v).collect();
        let m = ModelIndex::piecewise(degree);
        let values: Vec<(f64, f64, f64)> = (0..dense * dense)
            .into_par_iter()
            .map(|k| {
                let mu = step(-1.0, 1.0, dense, k % dense);
                let sigma = step(0.5, 2.0, dense, k / dense);
                (value_at(&x, m, &g, mu, sigma), mu, sigma)
            })
            .collect();
        let best = values.iter().copied().fold((f64::INFINITY, 0.0, 0.0), |a, b| if b.0 < a.0 { b } else { a });
        // Variation the coarse grid cannot resolve: the dense spread across
        // one coarse cell centred on the dense argmin.
        let (h_mu, h_sigma) = (2.0 / (coarse_mu - 1) as f64, 1.5 / (coarse_sigma - 1) as f64);
        let spread = values
            .iter()
            .filter(|v| (v.1 - best.1).abs() <= h_mu && (v.2 - best.2).abs() <= h_sigma)
            .map(|v| v.0 - best.0)
            .fold(0.0, f64::max);
        let fit = t_tilde_affine(&x, m, &g, &region, &grid).unwrap();
        assert!((fit.value - value_at(&x, m, &g, fit.mu, fit.sigma)).abs() < 1e-12);
        assert!(fit.mu >= -1.0 && fit.mu <= 1.0 && fit.sigma >= 0.5 && fit.sigma <= 2.0);
        assert!(
            (fit.value - best.0).abs() <= spread,
            "grid {} dense {} spread {spread}",
            fit.value,
            best.0
        );
    }
}

#[test]
fn compact_test_holds_level_at_grid_nodes() {
    let g = NullDensity::standard_gaussian();
    let (n, alpha, reps) = (100, 0.05, 20_000u64);
    let stat = NullStatistic::simple(g.clone(), ModelCollection::piecewise(1..=8).unwrap());
    let table = calibrate(&stat, n, alpha, Budgets { b1: 20_000, b2: 20_000 }, 100, 8).unwrap();
    let region = AffineRegion::new(-1.0, 1.0, 0.5, 2.0).unwrap();
    let grid = AffineGrid::new(5, 5, 0);
    for (mu, sigma) in [(0.0, 1.25), (-1.0, 0.5), (1.0, 2.0), (0.5, 0.875)] {
        let alt = Alternative::LocationScale { null: g.clone(), mu, sigma };
        let rejections: usize = (0..reps)
            .into_par_iter()
            .map(|r| {
                let x = alt.sample(n, &mut derive_stream(9, "compact-level", r));
                run_composite_compact_test(&x, &g, &region, &grid, &table).unwrap().reject as usize
            })
            .sum();
        let level = rejections as f64 / reps as f64;
        assert!(level <= alpha + 0.01, "level {level} at ({mu}, {sigma})");
    }
}
