//! The penalized Euclidean distance objective
//! `L(λ, β) = ‖Y − Xβ‖ + λ·√(‖β‖₁·‖β‖₂)` and the quantities derived from it.
//!
//! The penalty is the geometric mean of the ℓ₁ and ℓ₂ norms, itself a norm.
//! It is smooth inside every open orthant but not where a coordinate
//! vanishes. Two treatments are provided:
//!
//! * [`pseudo_gradient`]: the minimum-norm coordinatewise subgradient, used by
//!   the orthant-wise optimizer. It is zero exactly at stationary points.
//! * [`SmoothedObjective`] / [`ped_gradient`]: `|βⱼ| → √(βⱼ² + ε²)` and
//!   `‖β‖ → √(‖β‖² + ε²)`, differentiable everywhere. With `ε = 0` it is the
//!   exact objective and, off the kinks, its exact gradient.

use ndarray::{Array1, ArrayView1, Zip};

use crate::data::Problem;
use crate::error::{PedError, Result};

/// Below this residual norm the Euclidean term has no usable gradient.
pub const RESIDUAL_GUARD: f64 = 1e-10;

pub fn l1_norm(beta: ArrayView1<'_, f64>) -> f64 {
    beta.iter().map(|b| b.abs()).sum()
}

pub fn l2_norm(beta: ArrayView1<'_, f64>) -> f64 {
    beta.dot(&beta).sqrt()
}

/// `‖β‖₍₁,₂₎ = √(‖β‖₁·‖β‖₂)`.
pub fn geometric_mean_norm(beta: ArrayView1<'_, f64>) -> f64 {
    (l1_norm(beta) * l2_norm(beta)).sqrt()
}

/// Concentration `k̂ = √(‖β‖₂/‖β‖₁)`, which lies in `[p^{-1/4}, 1]`.
pub fn k_hat(beta: ArrayView1<'_, f64>) -> Result<f64> {
    let l1 = l1_norm(beta);
    if l1 == 0.0 {
        return Err(PedError::ZeroCoefficients("k_hat"));
    }
    Ok((l2_norm(beta) / l1).sqrt().min(1.0))
}

pub fn residual(problem: &Problem<'_>, beta: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    if beta.len() != problem.p() {
        return Err(PedError::DimensionMismatch { expected: problem.p(), found: beta.len() });
    }
    Ok(&problem.y - &problem.x.dot(&beta))
}

#[derive(Debug, Clone)]
pub struct ObjectiveParts {
    /// `‖Y − Xβ‖`
    pub residual_norm: f64,
    /// `‖β‖₍₁,₂₎`
    pub penalty_norm: f64,
    pub objective: f64,
    /// `x_jᵀr/‖r‖`; `None` when the residual vanishes.
    pub cosines: Option<Array1<f64>>,
    /// `None` when `β = 0`.
    pub k_hat: Option<f64>,
}

pub fn ped_objective(problem: &Problem<'_>, beta: ArrayView1<'_, f64>, lambda: f64) -> Result<ObjectiveParts> {
    let r = residual(problem, beta)?;
    let residual_norm = r.dot(&r).sqrt();
    let penalty_norm = geometric_mean_norm(beta);
    let cosines = (residual_norm > 0.0).then(|| {
        problem.x.t().dot(&r).mapv(|c| (c / residual_norm).clamp(-1.0, 1.0))
    });
    Ok(ObjectiveParts {
        residual_norm,
        penalty_norm,
        objective: residual_norm + lambda * penalty_norm,
        cosines,
        k_hat: k_hat(beta).ok(),
    })
}

/// Smoothed ℓ₁ and ℓ₂ norms `(A, B)`.
fn smoothed_norms(beta: ArrayView1<'_, f64>, eps: f64) -> (f64, f64) {
    let eps2 = eps * eps;
    let a = beta.iter().map(|b| (b * b + eps2).sqrt()).sum();
    let b = (beta.dot(&beta) + eps2).sqrt();
    (a, b)
}

/// Smoothed penalty norm `√(A·B)`.
pub fn smoothed_penalty(beta: ArrayView1<'_, f64>, eps: f64) -> f64 {
    let (a, b) = smoothed_norms(beta, eps);
    (a * b).sqrt()
}

/// Gradient of `λ·√(A·B)`:
/// `(λ/2)·[A·β/B + B·s(β)]/√(A·B)` with `s(βⱼ) = βⱼ/√(βⱼ² + ε²)`.
fn penalty_gradient_into(beta: ArrayView1<'_, f64>, lambda: f64, eps: f64, out: &mut Array1<f64>) {
    if lambda == 0.0 {
        return;
    }
    let (a, b) = smoothed_norms(beta, eps);
    let ab = (a * b).sqrt();
    if ab == 0.0 {
        // β = 0 with ε = 0: take the zero subgradient.
        return;
    }
    let scale = 0.5 * lambda / ab;
    let eps2 = eps * eps;
    Zip::from(out).and(beta).for_each(|g, &bj| {
        let sign = if bj == 0.0 { 0.0 } else { bj / (bj * bj + eps2).sqrt() };
        *g += scale * (a * bj / b + b * sign);
    });
}

/// Gradient of the smoothed objective (exact gradient when `smoothing_eps = 0`
/// and no coordinate is zero).
pub fn ped_gradient(
    problem: &Problem<'_>,
    beta: ArrayView1<'_, f64>,
    lambda: f64,
    smoothing_eps: f64,
) -> Result<Array1<f64>> {
    SmoothedObjective::new(*problem, lambda, smoothing_eps)
        .evaluate(beta)
        .map(|(_, g)| g)
}

/// The smoothed objective at fixed `λ` and `ε`, evaluated together with its gradient.
#[derive(Debug, Clone, Copy)]
pub struct SmoothedObjective<'a> {
    pub problem: Problem<'a>,
    pub lambda: f64,
    pub eps: f64,
}

impl<'a> SmoothedObjective<'a> {
    pub fn new(problem: Problem<'a>, lambda: f64, eps: f64) -> Self {
        Self { problem, lambda, eps }
    }

    pub fn value(&self, beta: ArrayView1<'_, f64>) -> Result<f64> {
        let r = residual(&self.problem, beta)?;
        Ok(r.dot(&r).sqrt() + self.lambda * smoothed_penalty(beta, self.eps))
    }

    pub fn evaluate(&self, beta: ArrayView1<'_, f64>) -> Result<(f64, Array1<f64>)> {
        let r = residual(&self.problem, beta)?;
        let rn = r.dot(&r).sqrt();
        if rn <= RESIDUAL_GUARD {
            return Err(PedError::InterpolationRegime { residual: rn, guard: RESIDUAL_GUARD });
        }
        let mut grad = self.problem.x.t().dot(&r);
        grad.mapv_inplace(|c| -c / rn);
        penalty_gradient_into(beta, self.lambda, self.eps, &mut grad);
        let value = rn + self.lambda * smoothed_penalty(beta, self.eps);
        Ok((value, grad))
    }
}

/// Loss value and loss gradient `−Xᵀr/‖r‖` at `beta`, with the exact penalty added to the value.
pub fn exact_value_and_loss_gradient(
    problem: &Problem<'_>,
    beta: ArrayView1<'_, f64>,
    lambda: f64,
) -> Result<(f64, Array1<f64>)> {
    let r = residual(problem, beta)?;
    let rn = r.dot(&r).sqrt();
    if rn <= RESIDUAL_GUARD {
        return Err(PedError::InterpolationRegime { residual: rn, guard: RESIDUAL_GUARD });
    }
    let mut grad = problem.x.t().dot(&r);
    grad.mapv_inplace(|c| -c / rn);
    Ok((rn + lambda * geometric_mean_norm(beta), grad))
}

/// Dual norm of the penalty, `max gᵀd / √(‖d‖₁‖d‖₂)`, and a unit-ℓ₂ maximizer.
///
/// A maximizer has the form `sgn(g)·(|g| − t)₊`, so the search runs over the
/// threshold `t`: on each interval between consecutive sorted `|gⱼ|` the
/// support is fixed and the ratio is a smooth function of `t`.
pub fn dual_norm(g: ArrayView1<'_, f64>) -> (f64, Array1<f64>) {
    let mut order: Vec<usize> = (0..g.len()).collect();
    order.sort_by(|&a, &b| g[b].abs().total_cmp(&g[a].abs()));
    let mags: Vec<f64> = order.iter().map(|&j| g[j].abs()).collect();
    if mags.first().is_none_or(|&m| m == 0.0) {
        return (0.0, Array1::zeros(g.len()));
    }

    let (mut best, mut best_t) = (0.0, 0.0);
    let (mut s1, mut s2) = (0.0, 0.0);
    for k in 1..=mags.len() {
        s1 += mags[k - 1];
        s2 += mags[k - 1] * mags[k - 1];
        let hi = mags[k - 1];
        let lo = mags.get(k).copied().unwrap_or(0.0);
        if hi <= lo {
            continue;
        }
        let kf = k as f64;
        let ratio = |t: f64| {
            let l1 = s1 - kf * t;
            let l2 = (s2 - 2.0 * t * s1 + kf * t * t).max(0.0).sqrt();
            if l1 <= 0.0 || l2 <= 0.0 {
                return 0.0;
            }
            (s2 - t * s1) / (l1 * l2).sqrt()
        };
        // Coarse scan, then golden-section refinement around the best sample.
        const SAMPLES: usize = 8;
        let step = (hi - lo) / SAMPLES as f64;
        let mut arg = lo;
        let mut val = ratio(lo);
        for i in 1..SAMPLES {
            let t = lo + step * i as f64;
            let v = ratio(t);
            if v > val {
                (arg, val) = (t, v);
            }
        }
        let (mut a, mut b) = ((arg - step).max(lo), (arg + step).min(hi));
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..40 {
            let m1 = b - phi * (b - a);
            let m2 = a + phi * (b - a);
            if ratio(m1) < ratio(m2) {
                a = m1;
            } else {
                b = m2;
            }
        }
        let t = 0.5 * (a + b);
        let v = ratio(t);
        if v > val {
            (arg, val) = (t, v);
        }
        if val > best {
            (best, best_t) = (val, arg);
        }
    }

    let mut d = g.mapv(|v| v.signum() * (v.abs() - best_t).max(0.0));
    let norm = l2_norm(d.view());
    if norm > 0.0 {
        d /= norm;
    }
    (best, d)
}

/// Minimum-norm element of the coordinatewise subdifferential of the exact objective,
/// given the loss gradient at `beta`.
///
/// For `βⱼ ≠ 0` this is the ordinary partial derivative. For `βⱼ = 0` the
/// penalty's one-sided derivatives are `±λk̂/2`, so the component is the loss
/// derivative soft-thresholded by that amount.
///
/// At `β = 0` the penalty is not separable: zero is optimal iff the dual norm
/// of the loss gradient is at most `λ`. Otherwise the result is `−δ·u`, where
/// `u` is the steepest-descent direction from [`dual_norm`] and `−δ < 0` is the
/// directional derivative along it. Either way the result vanishes exactly
/// when the optimality conditions hold.
pub fn pseudo_gradient_from_loss(beta: ArrayView1<'_, f64>, loss_grad: &Array1<f64>, lambda: f64) -> Array1<f64> {
    let a = l1_norm(beta);
    let b = l2_norm(beta);
    if b == 0.0 {
        let (dual, u) = dual_norm(loss_grad.mapv(|v| -v).view());
        if dual <= lambda {
            return Array1::zeros(beta.len());
        }
        let slope = (dual - lambda) * geometric_mean_norm(u.view());
        return u * -slope;
    }
    let mut pg = loss_grad.clone();
    let p = (a * b).sqrt();
    let kink = 0.5 * lambda * b / p;
    Zip::from(&mut pg).and(beta).for_each(|g, &bj| {
        if bj != 0.0 {
            *g += 0.5 * lambda * (bj.signum() * b + a * bj / b) / p;
        } else {
            *g = soft_threshold(*g, kink);
        }
    });
    pg
}

pub fn pseudo_gradient(problem: &Problem<'_>, beta: ArrayView1<'_, f64>, lambda: f64) -> Result<Array1<f64>> {
    let (_, loss_grad) = exact_value_and_loss_gradient(problem, beta, lambda)?;
    Ok(pseudo_gradient_from_loss(beta, &loss_grad, lambda))
}

fn soft_threshold(g: f64, t: f64) -> f64 {
    if g > t {
        g - t
    } else if g < -t {
        g + t
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn tiny_problem() -> (Array2<f64>, Array1<f64>) {
        let x = array![[1.0, 0.5], [-0.5, 1.0], [0.2, -0.3], [0.7, 0.1]];
        let y = array![1.0, -2.0, 0.5, 0.25];
        (x, y)
    }

    #[test]
    fn geometric_mean_norm_values() {
        assert_eq!(geometric_mean_norm(array![0.0, 0.0].view()), 0.0);
        assert!((geometric_mean_norm(array![-3.5, 0.0, 0.0].view()) - 3.5).abs() < 1e-15);
        let v = geometric_mean_norm(array![1.0, 1.0].view());
        assert!((v - (2.0 * 2f64.sqrt()).sqrt()).abs() < 1e-15);
        assert!((v - 1.68179).abs() < 1e-5);
    }

    #[test]
    fn k_hat_values() {
        assert_eq!(k_hat(array![0.0, -2.0, 0.0].view()).unwrap(), 1.0);
        let p = 16;
        let equal = Array1::from_elem(p, 0.7);
        assert!((k_hat(equal.view()).unwrap() - (p as f64).powf(-0.25)).abs() < 1e-15);
        assert!(matches!(k_hat(array![0.0, 0.0].view()), Err(PedError::ZeroCoefficients(_))));
    }

    #[test]
    fn objective_at_zero_and_without_penalty() {
        let (x, y) = tiny_problem();
        let prob = Problem::new(x.view(), y.view()).unwrap();
        let parts = ped_objective(&prob, array![0.0, 0.0].view(), 0.7).unwrap();
        assert!((parts.objective - y.dot(&y).sqrt()).abs() < 1e-15);
        assert!(parts.k_hat.is_none());

        let beta = array![0.3, -0.8];
        let parts = ped_objective(&prob, beta.view(), 0.0).unwrap();
        assert_eq!(parts.objective, parts.residual_norm);
        assert!(ped_objective(&prob, array![1.0].view(), 0.5).is_err());
    }

    #[test]
    fn gradient_reductions() {
        let (x, y) = tiny_problem();
        let prob = Problem::new(x.view(), y.view()).unwrap();
        let beta = array![0.4, -0.1];
        let r = residual(&prob, beta.view()).unwrap();
        let rn = r.dot(&r).sqrt();
        let expected = x.t().dot(&r).mapv(|c| -c / rn);
        let g = ped_gradient(&prob, beta.view(), 0.0, 1e-8).unwrap();
        for (a, b) in g.iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-14);
        }

        // 1-sparse: penalty = λ|t|, so its derivative in the active coordinate is λ.
        let lambda = 0.9;
        let t = array![1.3, 0.0];
        let full = ped_gradient(&prob, t.view(), lambda, 0.0).unwrap();
        let loss_only = ped_gradient(&prob, t.view(), 0.0, 0.0).unwrap();
        assert!((full[0] - loss_only[0] - lambda).abs() < 1e-14);
    }

    #[test]
    fn pseudo_gradient_matches_gradient_off_kinks_and_thresholds_at_zero() {
        let (x, y) = tiny_problem();
        let prob = Problem::new(x.view(), y.view()).unwrap();
        let beta = array![0.4, -0.1];
        let pg = pseudo_gradient(&prob, beta.view(), 0.8).unwrap();
        let g = ped_gradient(&prob, beta.view(), 0.8, 0.0).unwrap();
        for (a, b) in pg.iter().zip(g.iter()) {
            assert!((a - b).abs() < 1e-14);
        }

        // At a zero coordinate the component is zero iff |loss derivative| ≤ λk̂/2.
        let beta = array![0.9, 0.0];
        let loss = ped_gradient(&prob, beta.view(), 0.0, 0.0).unwrap();
        let kink = 0.5 * 0.8 * 1.0; // k̂ = 1 for a 1-sparse vector
        let pg = pseudo_gradient(&prob, beta.view(), 0.8).unwrap();
        let expected = if loss[1].abs() <= kink { 0.0 } else { loss[1] - kink * loss[1].signum() };
        assert!((pg[1] - expected).abs() < 1e-14);

        let pg0 = pseudo_gradient(&prob, array![0.0, 0.0].view(), 100.0).unwrap();
        assert_eq!(pg0.to_vec(), vec![0.0, 0.0]);
    }

    #[test]
    fn dual_norm_of_spread_vector() {
        // For g = (1,…,1) the best direction is uniform: p / p^{3/4} = p^{1/4}.
        let g = Array1::from_elem(16, 1.0);
        let (v, d) = dual_norm(g.view());
        assert!((v - 2.0).abs() < 1e-9, "{v}");
        assert!(d.iter().all(|&x| (x - 0.25).abs() < 1e-9));
        // 1-sparse: the dual of a vector with one entry is that entry.
        let (v, _) = dual_norm(array![0.0, -3.0, 0.0].view());
        assert!((v - 3.0).abs() < 1e-12);
    }

    #[test]
    fn dual_norm_bounds_every_direction() {
        let g = array![0.9, -0.7, 0.65, 0.3, -0.05];
        let (v, d) = dual_norm(g.view());
        let attained = g.dot(&d) / geometric_mean_norm(d.view());
        assert!((attained - v).abs() < 1e-9);
        let mut state = 7u64;
        for _ in 0..2000 {
            let dir: Array1<f64> = (0..5)
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
                })
                .collect();
            assert!(g.dot(&dir) <= v * geometric_mean_norm(dir.view()) + 1e-12);
        }
    }

    #[test]
    fn zero_is_left_when_spread_correlation_beats_lambda() {
        // Each |cos| = 0.5 is below λ = 0.6, yet moving along all four at once pays.
        let x = Array2::from_shape_fn((8, 4), |(i, j)| if i == 2 * j || i == 2 * j + 1 { 0.5f64.sqrt() } else { 0.0 });
        let y = Array1::from_elem(8, 1.0);
        let prob = Problem::new(x.view(), y.view()).unwrap();
        let pg = pseudo_gradient(&prob, Array1::zeros(4).view(), 0.6).unwrap();
        assert!(pg.iter().all(|&v| v < 0.0));
        let pg = pseudo_gradient(&prob, Array1::zeros(4).view(), 0.75).unwrap();
        assert!(pg.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn residual_guard_trips() {
        let x = array![[1.0], [0.0]];
        let y = array![2.0, 0.0];
        let prob = Problem::new(x.view(), y.view()).unwrap();
        let err = ped_gradient(&prob, array![2.0].view(), 0.5, 1e-8).unwrap_err();
        assert!(matches!(err, PedError::InterpolationRegime { .. }));
    }
}
