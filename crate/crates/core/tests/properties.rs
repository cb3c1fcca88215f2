use ndarray::{Array1, Array2, Axis};
use ped::algorithm::{ped_fit, PedConfig};
use ped::data::{Problem, RawDataset, StandardizedDataset};
use ped::objective::{geometric_mean_norm, l1_norm, l2_norm, ped_gradient, ped_objective, SmoothedObjective};
use ped::optimizer::{minimize, OptimizerConfig};
use ped::simulation::{aggregate, run_study, score_estimate, SimulationSpec};
use ped::verification::random_instance;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn coeffs(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![3 => -10.0..10.0f64, 1 => Just(0.0)], 1..=max_len)
}

fn raw_dataset(seed: u64, n: usize, p: usize) -> RawDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((n, p), |_| rng.random_range(-5.0..5.0) + 3.0);
    let y = Array1::from_shape_fn(n, |_| rng.random_range(-2.0..2.0) + 10.0);
    RawDataset::new(x, y, None).unwrap()
}

fn instance(seed: u64, n: usize, p: usize) -> StandardizedDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_instance(n, p, 0.5, (p / 3).max(1), 0.5, &mut rng).unwrap()
}

/// Few strong signals and unit noise: nonzero refits, no interpolation.
fn sparse_instance(seed: u64, n: usize, p: usize, sigma: f64) -> StandardizedDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_instance(n, p, 0.5, 4, sigma, &mut rng).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

    #[test]
    fn penalty_norm_axioms(a in coeffs(50), seed in any::<u64>(), c in -20.0..20.0f64) {
        let a = Array1::from(a);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = Array1::from_shape_fn(a.len(), |_| rng.random_range(-10.0..10.0));
        let na = geometric_mean_norm(a.view());

        let scaled = geometric_mean_norm((&a * c).view());
        prop_assert!((scaled - c.abs() * na).abs() <= 1e-12 * (1.0 + c.abs() * na));

        let sum = geometric_mean_norm((&a + &b).view());
        prop_assert!(sum <= na + geometric_mean_norm(b.view()) + 1e-12 * (1.0 + sum));

        prop_assert_eq!(na == 0.0, a.iter().all(|v| *v == 0.0));
        prop_assert!(l2_norm(a.view()) <= na * (1.0 + 1e-12));
        prop_assert!(na <= l1_norm(a.view()) * (1.0 + 1e-12));
    }

    #[test]
    fn objective_is_convex(seed in any::<u64>(), t in 0.0..=1.0f64, lambda in 0.0..3.0f64) {
        let ds = instance(seed, 15, 6);
        let problem = ds.problem();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let b1 = Array1::from_shape_fn(6, |_| rng.random_range(-3.0..3.0));
        let b2 = Array1::from_shape_fn(6, |_| if rng.random::<bool>() { 0.0 } else { rng.random_range(-3.0..3.0) });
        let mid = &b1 * t + &b2 * (1.0 - t);
        let f = |b: &Array1<f64>| ped_objective(&problem, b.view(), lambda).unwrap().objective;
        prop_assert!(f(&mid) <= t * f(&b1) + (1.0 - t) * f(&b2) + 1e-10);
    }

    #[test]
    fn smoothed_gradient_matches_differences(seed in any::<u64>(), lambda in 0.0..2.0f64) {
        let ds = instance(seed, 12, 5);
        let problem = ds.problem();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let beta = Array1::from_shape_fn(5, |_| {
            let v: f64 = rng.random_range(0.1..2.0);
            if rng.random::<bool>() { v } else { -v }
        });
        let eps = 1e-3;
        let g = ped_gradient(&problem, beta.view(), lambda, eps).unwrap();
        let obj = SmoothedObjective::new(problem, lambda, eps);
        let h = 1e-6;
        for j in 0..5 {
            let (mut up, mut down) = (beta.clone(), beta.clone());
            up[j] += h;
            down[j] -= h;
            let fd = (obj.value(up.view()).unwrap() - obj.value(down.view()).unwrap()) / (2.0 * h);
            prop_assert!((fd - g[j]).abs() <= 1e-5 * g[j].abs().max(1.0), "j={} fd={} g={}", j, fd, g[j]);
        }
    }

    #[test]
    fn cosines_are_bounded(seed in any::<u64>(), scale in 1e-6..1e6f64) {
        let ds = instance(seed, 10, 20);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
        let beta = Array1::from_shape_fn(20, |_| scale * rng.random_range(-1.0..1.0));
        let parts = ped_objective(&ds.problem(), beta.view(), 0.5).unwrap();
        prop_assert!(parts.cosines.unwrap().iter().all(|c| (-1.0..=1.0).contains(c)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn standardized_columns_are_centred_unit(seed in any::<u64>(), n in 3usize..40, p in 1usize..15) {
        let ds = raw_dataset(seed, n, p).standardize().unwrap();
        for col in ds.x().axis_iter(Axis(1)) {
            prop_assert!(col.sum().abs() <= 1e-10);
            prop_assert!((l2_norm(col) - 1.0).abs() <= 1e-10);
        }
        prop_assert!(ds.y().sum().abs() <= 1e-10 * (1.0 + l2_norm(ds.y())));
    }

    #[test]
    fn standardize_is_idempotent(seed in any::<u64>(), n in 3usize..40, p in 1usize..15) {
        let once = raw_dataset(seed, n, p).standardize().unwrap();
        let twice = RawDataset::new(once.x().to_owned(), once.y().to_owned(), None).unwrap().standardize().unwrap();
        prop_assert_eq!(twice.p(), once.p());
        let dx = (&twice.x() - &once.x()).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let dy = (&twice.y() - &once.y()).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        prop_assert!(dx <= 1e-10 && dy <= 1e-10);
    }

    #[test]
    fn destandardize_preserves_predictions(seed in any::<u64>(), n in 3usize..30, p in 1usize..10) {
        let raw = raw_dataset(seed, n, p);
        let ds = raw.standardize().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 4);
        let beta = Array1::from_shape_fn(ds.p(), |_| rng.random_range(-3.0..3.0));
        let (beta_raw, intercept) = ds.destandardize(beta.view()).unwrap();
        let raw_pred = raw.x().dot(&beta_raw) + intercept;
        let std_pred = ds.x().dot(&beta) + ds.y_mean();
        let gap = (&raw_pred - &std_pred).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        prop_assert!(gap <= 1e-10 * (1.0 + raw_pred.iter().fold(0.0_f64, |m, v| m.max(v.abs()))));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn accepted_steps_decrease_objective(seed in any::<u64>(), lambda in 0.1..1.5f64) {
        let ds = instance(seed, 30, 12);
        let problem = ds.problem();
        let rep = minimize(&problem, lambda, problem.correlations().view(), &OptimizerConfig::default()).unwrap();
        prop_assert!(rep.objective_trace.windows(2).all(|w| w[1] < w[0]));
        let again = minimize(&problem, lambda, problem.correlations().view(), &OptimizerConfig::default()).unwrap();
        prop_assert_eq!(rep.beta_opt, again.beta_opt);
    }

    #[test]
    fn column_permutation_permutes_solution(seed in any::<u64>(), lambda in 0.2..1.5f64) {
        let ds = instance(seed, 30, 8);
        let problem = ds.problem();
        let mut perm: Vec<usize> = (0..8).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 5);
        for i in (1..8).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let xp = ds.x().select(Axis(1), &perm);
        let permuted = Problem::new(xp.view(), ds.y()).unwrap();
        let cfg = OptimizerConfig { grad_tol: 1e-12, ..OptimizerConfig::tight() };
        let a = minimize(&problem, lambda, problem.correlations().view(), &cfg).unwrap();
        let b = minimize(&permuted, lambda, permuted.correlations().view(), &cfg).unwrap();
        for (k, &j) in perm.iter().enumerate() {
            prop_assert!((b.beta_opt[k] - a.beta_opt[j]).abs() <= 1e-8, "{} vs {}", b.beta_opt[k], a.beta_opt[j]);
        }
    }

    #[test]
    fn fit_structure(seed in any::<u64>(), rounds in 0usize..3) {
        let ds = sparse_instance(seed, 60, 90, 1.0);
        let cfg = PedConfig { iterative_rounds: rounds, ..PedConfig::default() };
        let fit = ped_fit(&ds, &cfg).unwrap();
        prop_assert!(fit.screening_history.windows(2).all(|w| w[1].kept <= w[0].kept));
        for j in 0..ds.p() {
            if !fit.active_set.contains(&j) {
                prop_assert_eq!(fit.beta[j], 0.0);
            }
        }
        let norm = l2_norm(fit.beta.view());
        let threshold = 10.0 * fit.c_threshold / (ds.n() as f64).sqrt();
        for &j in &fit.active_set {
            if norm > 0.0 && fit.beta[j].abs() / norm > threshold {
                prop_assert_eq!(fit.beta[j].signum(), fit.cosines[j].signum());
            }
        }
    }

    #[test]
    fn rescaling_response_rescales_fit(seed in any::<u64>(), scale in 0.1..10.0f64) {
        let ds = sparse_instance(seed, 60, 30, 0.3);
        let scaled = StandardizedDataset::from_standardized(ds.x().to_owned(), ds.y().to_owned() * scale).unwrap();
        let cfg = PedConfig { optimizer: OptimizerConfig::tight(), ..PedConfig::default() }.with_fixed_grid(0.5, 0.75);
        let a = ped_fit(&ds, &cfg).unwrap();
        let b = ped_fit(&scaled, &cfg).unwrap();
        prop_assert_eq!(&a.active_set, &b.active_set);
        prop_assert!(a.model_size() > 0);
        let rel = l2_norm((&b.beta - &(&a.beta * scale)).view()) / (scale * l2_norm(a.beta.view())).max(1e-300);
        prop_assert!(rel <= 1e-6, "relative gap {}", rel);
    }
}

#[test]
fn simulation_metrics_are_consistent() {
    let spec = SimulationSpec::example_one(100, 200, 0.7, 4, 3).unwrap();
    let report = run_study(&spec, &PedConfig::default()).unwrap();
    for o in &report.per_replicate {
        assert!(o.true_positives <= 12 && o.true_positives <= o.model_size);
        let (tp, ms, se) = score_estimate(&o.beta_hat, &spec.beta_star);
        assert_eq!((tp, ms), (o.true_positives, o.model_size));
        assert!((se - o.squared_error).abs() <= 1e-12 * (1.0 + se));
    }
    let again = aggregate(spec.p, report.per_replicate.clone(), report.failures.clone()).unwrap();
    assert!((again.tp - report.tp).abs() <= 1e-12);
    assert!((again.ms - report.ms).abs() <= 1e-12);
    assert!((again.rmse - report.rmse).abs() <= 1e-12);
}
