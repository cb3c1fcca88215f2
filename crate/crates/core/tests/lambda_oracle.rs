//! Theoretical λ against an independent normal quantile.

use ped::algorithm::{lambda_f, theoretical_lambda};
use statrs::function::erf::erfc;

/// Upper-tail quantile by bisection on `Φ̄(x) = erfc(x/√2)/2`.
fn upper_quantile(tail: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 40.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if 0.5 * erfc(mid / std::f64::consts::SQRT_2) > tail {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn oracle(n: usize, p: usize, alpha: f64, c: f64) -> f64 {
    c * (p as f64).powf(0.25) / (n as f64).sqrt() * upper_quantile(alpha / (2.0 * p as f64))
}

#[test]
fn matches_independent_quantile() {
    for &(n, p) in &[(100, 200), (100, 12), (50, 5), (800, 1600), (205, 500), (10, 100_000)] {
        for &alpha in &[0.01, 0.05, 0.2] {
            let got = theoretical_lambda(n, p, alpha, 1.1);
            let want = oracle(n, p, alpha, 1.1);
            assert!((got - want).abs() <= 1e-9 * want, "n={n} p={p} alpha={alpha}: {got} vs {want}");
        }
    }
}

#[test]
fn reference_values() {
    // Hand-rounded reference figures.
    assert!((theoretical_lambda(100, 200, 0.05, 1.1) - 1.5148).abs() < 2e-4);
    assert!((lambda_f(100, 12, 0.05, 1.1) - 0.586).abs() < 1e-3);
}

#[test]
fn lambda_f_without_screening_is_theoretical() {
    assert_eq!(lambda_f(100, 200, 0.05, 1.1), theoretical_lambda(100, 200, 0.05, 1.1));
}
