mod common;

use std::sync::Arc;

use common::{central_diff, constant_basis, max_rel_err, random_dataset, Oracle};
use kgcp::hyperfit::neg_concentrated_log_likelihood;
use kgcp::kriging::{fit, BasisSet, Dataset, FitOptions, Hyperparameters, KrigingModel};
use kgcp::Domain;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn quadratic_basis(u: &[f64]) -> Vec<f64> {
    let mut out = vec![1.0];
    out.extend(u.iter().copied());
    out.extend(u.iter().map(|v| v * v));
    out
}

fn random_domain<R: Rng>(d: usize, rng: &mut R) -> Domain {
    let lower: Vec<f64> = (0..d).map(|_| rng.gen_range(-10.0..10.0)).collect();
    let upper = lower.iter().map(|l| l + rng.gen_range(0.5..20.0)).collect();
    Domain::new(lower, upper).unwrap()
}

fn random_theta<R: Rng>(d: usize, rng: &mut R) -> Hyperparameters {
    Hyperparameters::new((0..d).map(|_| 10f64.powf(rng.gen_range(1.0..2.5))).collect()).unwrap()
}

#[test]
fn matches_explicit_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..20 {
        let d = 1 + case % 3;
        let n = 4 + case % 7;
        let domain = random_domain(d, &mut rng);
        let data = random_dataset(n, &domain, &mut rng);
        let theta = random_theta(d, &mut rng);
        let model = fit(data.clone(), &BasisSet::ordinary(), &theta).unwrap();
        let oracle = Oracle::new(&data, theta.values(), model.jitter(), constant_basis);
        assert!((model.process_variance() - oracle.process_variance()).abs() <= 1e-10 * oracle.process_variance());
        for _ in 0..5 {
            let x: Vec<f64> = (0..d).map(|k| domain.lower[k] + rng.gen::<f64>() * domain.width(k)).collect();
            let p = model.predict(&x).unwrap();
            let (m, v) = oracle.predict(&x);
            assert!((p.mean - m).abs() <= 1e-10 * oracle.y_scale.max(m.abs()), "case {case}: mean {} vs {m}", p.mean);
            assert!(
                (p.unclamped_variance - v).abs() <= 1e-10 * oracle.process_variance(),
                "case {case}: variance {} vs {v}",
                p.unclamped_variance
            );
        }
        let nll = neg_concentrated_log_likelihood(&data, &BasisSet::ordinary(), &theta, &FitOptions::default()).unwrap();
        assert!(nll.valid);
        assert!((nll.neg_log_lik - oracle.neg_log_lik()).abs() <= 1e-10 * oracle.neg_log_lik().abs().max(1.0));
    }
}

#[test]
fn universal_kriging_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let domain = random_domain(2, &mut rng);
        let data = random_dataset(9, &domain, &mut rng);
        let theta = random_theta(2, &mut rng);
        let model = KrigingModel::fit(data.clone(), &BasisSet::pure_quadratic(2), &theta, &FitOptions::default()).unwrap();
        let oracle = Oracle::new(&data, theta.values(), model.jitter(), quadratic_basis);
        let x = [domain.lower[0] + 0.3 * domain.width(0), domain.lower[1] + 0.6 * domain.width(1)];
        let p = model.predict(&x).unwrap();
        let (m, v) = oracle.predict(&x);
        assert!((p.mean - m).abs() <= 1e-9 * oracle.y_scale);
        assert!((p.unclamped_variance - v).abs() <= 1e-9 * oracle.process_variance());
    }
}

#[test]
fn interpolates_training_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..10 {
        let domain = random_domain(3, &mut rng);
        let data = random_dataset(10, &domain, &mut rng);
        let model = fit(data.clone(), &BasisSet::ordinary(), &random_theta(3, &mut rng)).unwrap();
        let scale = data.y().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (row, y) in data.rows().zip(data.y()) {
            let p = model.predict(row).unwrap();
            assert!((p.mean - y).abs() <= 1e-8 * scale);
            assert!(p.variance <= 1e-8 * model.process_variance());
        }
    }
}

#[test]
fn prediction_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..20 {
        let d = rng.gen_range(1..=3);
        let domain = random_domain(d, &mut rng);
        let data = random_dataset(8, &domain, &mut rng);
        let model = fit(data, &BasisSet::ordinary(), &random_theta(d, &mut rng)).unwrap();
        let x: Vec<f64> = (0..d)
            .map(|k| domain.lower[k] + rng.gen_range(0.1..0.9) * domain.width(k))
            .collect();
        let h: Vec<f64> = (0..d).map(|k| 1e-5 * domain.width(k)).collect();
        let g = model.predict_gradient(&x).unwrap();
        let fd_mean = central_diff(|z| model.predict(z).unwrap().mean, &x, &h);
        let fd_var = central_diff(|z| model.predict(z).unwrap().unclamped_variance, &x, &h);
        let mean_floor = fd_mean.iter().fold(1e-6, |a: f64, v| a.max(v.abs()));
        let var_floor = fd_var.iter().fold(1e-6, |a: f64, v| a.max(v.abs()));
        assert!(max_rel_err(&g.mean, &fd_mean, 1e-3 * mean_floor) <= 1e-5, "{:?} vs {fd_mean:?}", g.mean);
        assert!(max_rel_err(&g.variance, &fd_var, 1e-3 * var_floor) <= 1e-5, "{:?} vs {fd_var:?}", g.variance);
    }
}

#[test]
fn refit_grows_by_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let data = random_dataset(5, &Domain::unit(2), &mut rng);
    let bigger = Arc::new(data.with_observation(&[0.123, 0.456], 1.0).unwrap());
    assert_eq!(bigger.len(), 6);
    assert!(data.with_observation(data.row(0), 0.0).is_err());
    let model = fit(bigger, &BasisSet::ordinary(), &Hyperparameters::new(vec![50.0, 50.0]).unwrap()).unwrap();
    assert!((model.predict(&[0.123, 0.456]).unwrap().mean - 1.0).abs() < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn variance_is_nonnegative_and_mean_finite(
        seed in any::<u64>(),
        x in proptest::collection::vec(0.0f64..=1.0, 2),
        log_theta in proptest::collection::vec(-1.0f64..2.0, 2),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = random_dataset(7, &Domain::unit(2), &mut rng);
        let model = fit(data, &BasisSet::ordinary(), &Hyperparameters::from_log10(&log_theta).unwrap()).unwrap();
        let p = model.predict(&x).unwrap();
        prop_assert!(p.mean.is_finite());
        prop_assert!(p.variance >= 0.0);
        prop_assert!(p.unclamped_variance >= -1e-9 * model.process_variance());
    }

    #[test]
    fn dataset_rejects_out_of_domain(v in 1.0001f64..10.0) {
        let r = Dataset::new(vec![vec![0.5], vec![v]], vec![0.0, 1.0], Domain::unit(1));
        prop_assert!(r.is_err());
    }
}
