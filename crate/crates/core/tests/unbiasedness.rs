use adaptive_gof::estimators::{theta_hat, ModelIndex};
use adaptive_gof::null_models::NullDensity;
use adaptive_gof::stream::derive_stream;

fn mc_mean(m: ModelIndex, reps: u64) -> (f64, f64) {
    let v: Vec<f64> = (0..reps)
        .map(|r| theta_hat(&NullDensity::Uniform01.sample(50, &mut derive_stream(31, "unbiased", r)), m).unwrap())
        .collect();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    (mean, (var / v.len() as f64).sqrt())
}

#[test]
fn projected_norm_is_unbiased_under_uniformity() {
    for d in [1, 2, 4, 8] {
        let (mean, se) = mc_mean(ModelIndex::piecewise(d), 10_000);
        assert!((mean - 1.0).abs() <= 3.0 * se + 1e-12, "D = {d}: mean {mean}, se {se}");
    }
    for d in [1, 3, 6] {
        let (mean, se) = mc_mean(ModelIndex::fourier(d), 10_000);
        assert!((mean - 1.0).abs() <= 3.0 * se, "Fourier D = {d}: mean {mean}, se {se}");
    }
}
