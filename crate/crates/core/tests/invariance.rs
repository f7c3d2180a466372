use adaptive_gof::adaptive_test::run_composite_invariant_test;
use adaptive_gof::baselines::{ks_exponential_statistic, ks_statistic};
use adaptive_gof::calibration::{calibrate, Budgets, NullStatistic};
use adaptive_gof::estimators::{t_hat, t_tilde_scale_collection, ModelCollection, ModelIndex, ScaleSearchPolicy};
use adaptive_gof::null_models::NullDensity;
use adaptive_gof::stream::derive_stream;

fn exp_sample(n: usize, r: u64) -> Vec<f64> {
    NullDensity::Exponential.sample(n, &mut derive_stream(41, "invariance", r))
}

#[test]
fn scale_infimum_is_bit_identical_under_rescaling() {
    let models = ModelCollection::piecewise(2..=10).unwrap();
    let policy = ScaleSearchPolicy::default();
    for r in 0..20 {
        let x = exp_sample(20 + 10 * r as usize, r);
        let base = t_tilde_scale_collection(&x, &models, &NullDensity::Exponential, &policy).unwrap();
        for c in [0.1, 3.0, 100.0, 7.0] {
            let y: Vec<f64> = x.iter().map(|v| c * v).collect();
            let scaled = t_tilde_scale_collection(&y, &models, &NullDensity::Exponential, &policy).unwrap();
            for (a, b) in base.iter().zip(&scaled) {
                assert_eq!(a.value.to_bits(), b.value.to_bits(), "c = {c}, replicate {r}");
                assert!((b.sigma / a.sigma - c).abs() <= 1e-12 * c);
            }
        }
    }
}

#[test]
fn scale_infimum_is_below_value_at_the_mean() {
    let models = ModelCollection::piecewise(2..=10).unwrap();
    for r in 0..20 {
        let x = exp_sample(60, 100 + r);
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let z: Vec<f64> = x.iter().map(|v| v / mean).collect();
        let fits = t_tilde_scale_collection(&x, &models, &NullDensity::Exponential, &ScaleSearchPolicy::default()).unwrap();
        for (fit, m) in fits.iter().zip(models.iter()) {
            assert!(fit.value <= t_hat(&z, *m, &NullDensity::Exponential).unwrap() + 1e-9);
        }
    }
}

#[test]
fn ks_distribution_free_and_exponential_invariant() {
    let normal = NullDensity::standard_gaussian();
    for r in 0..30 {
        let x = normal.sample(50, &mut derive_stream(42, "dfree", r));
        assert_eq!(ks_statistic(&x, &normal).unwrap(), ks_statistic(&normal.transform_to_uniform(&x), &NullDensity::Uniform01).unwrap());
        let e = exp_sample(50, 200 + r);
        let base = ks_exponential_statistic(&e).unwrap();
        for c in [0.1, 3.0, 100.0] {
            let y: Vec<f64> = e.iter().map(|v| c * v).collect();
            assert_eq!(ks_exponential_statistic(&y).unwrap(), base);
        }
    }
}

#[test]
fn composite_decision_is_scale_invariant() {
    let policy = ScaleSearchPolicy::default();
    let stat = NullStatistic::composite_scale(NullDensity::Exponential, ModelCollection::piecewise(2..=6).unwrap(), policy);
    let table = calibrate(&stat, 40, 0.05, Budgets { b1: 400, b2: 400 }, 20, 3).unwrap();
    let mut rejected = 0;
    for r in 0..40 {
        let x = if r % 2 == 0 {
            exp_sample(40, 300 + r)
        } else {
            // Uniform data on (0, 2): clearly not exponential.
            NullDensity::Uniform01.sample(40, &mut derive_stream(43, "u", r)).iter().map(|u| 2.0 * u + 1e-9).collect()
        };
        let a = run_composite_invariant_test(&x, &NullDensity::Exponential, &policy, &table).unwrap();
        rejected += a.reject as usize;
        for c in [0.1, 3.0, 7.0, 100.0] {
            let y: Vec<f64> = x.iter().map(|v| c * v).collect();
            let b = run_composite_invariant_test(&y, &NullDensity::Exponential, &policy, &table).unwrap();
            assert_eq!(a.reject, b.reject);
            assert_eq!(a.statistic.to_bits(), b.statistic.to_bits());
            assert_eq!(a.witness, b.witness);
            for (p, q) in a.per_model.iter().zip(&b.per_model) {
                assert_eq!(p.raw.to_bits(), q.raw.to_bits());
                assert_eq!(p.exceedance.to_bits(), q.exceedance.to_bits());
                let (sp, sq) = (p.argmin.unwrap().sigma, q.argmin.unwrap().sigma);
                assert!((sq / sp - c).abs() <= 1e-12 * c);
            }
        }
    }
    assert!(rejected > 0);
}

#[test]
fn model_order_is_pinned() {
    let m = ModelCollection::new([ModelIndex::fourier(2), ModelIndex::piecewise(5), ModelIndex::fourier(1), ModelIndex::piecewise(2)]).unwrap();
    let v: Vec<String> = m.iter().map(|x| x.to_string()).collect();
    assert_eq!(v, ["pc:2", "pc:5", "fourier:1", "fourier:2"]);
}
