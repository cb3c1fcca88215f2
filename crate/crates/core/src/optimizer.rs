//! Limited-memory BFGS solvers for the PED objective.
//!
//! [`Strategy::OrthantWise`] works on the exact objective. Each iteration fixes
//! a sign orthant from the current signs and the pseudo-gradient, takes a
//! quasi-Newton step restricted to that orthant, and projects back onto it, so
//! coefficients reach exact zeros. Steps are accepted by backtracking on the
//! projected path. When the objective stalls, up to 50 further steps are taken
//! that shrink the pseudo-gradient while keeping the objective within a few ulps.
//!
//! [`Strategy::Smoothed`] runs two stages on the smoothed objective: the main
//! solve at `smoothing_eps`, then a refinement with `final_smoothing_eps`,
//! both with a strong-Wolfe line search and cubic interpolation.
//!
//! Curvature pairs with `sᵀy ≤ 1e-10·‖s‖‖y‖` are discarded in both.

use std::collections::VecDeque;

use ndarray::{Array1, ArrayView1, Zip};
use serde::Serialize;

use crate::data::Problem;
use crate::error::{PedError, Result};
use crate::objective::{
    exact_value_and_loss_gradient, l1_norm, l2_norm, ped_objective, pseudo_gradient_from_loss, SmoothedObjective,
};

/// Pairs whose cosine between `s` and `y` is at or below this are not stored.
const MIN_CURVATURE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    #[default]
    OrthantWise,
    Smoothed,
}

impl std::str::FromStr for Strategy {
    type Err = PedError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "orthant-wise" | "orthant_wise" | "owlqn" => Ok(Strategy::OrthantWise),
            "smoothed" => Ok(Strategy::Smoothed),
            other => Err(PedError::InvalidConfig(format!("unknown strategy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerConfig {
    pub strategy: Strategy,
    /// Number of stored `(s, y)` pairs.
    pub memory: usize,
    /// Iteration budget shared by both smoothing stages.
    pub max_iters: usize,
    /// Convergence threshold on the ∞-norm of the pseudo-gradient (orthant-wise)
    /// or of the smoothed gradient.
    pub grad_tol: f64,
    /// Relative objective decrease over `stall_window` iterations regarded as a stall.
    pub obj_tol: f64,
    pub stall_window: usize,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    pub max_line_search: usize,
    /// Smoothing for [`Strategy::Smoothed`].
    pub smoothing_eps: f64,
    /// Smoothing used by the refinement stage; `None` skips it.
    pub final_smoothing_eps: Option<f64>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::OrthantWise,
            memory: 10,
            max_iters: 2000,
            grad_tol: 1e-7,
            obj_tol: 1e-12,
            stall_window: 5,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 40,
            smoothing_eps: 1e-8,
            final_smoothing_eps: Some(1e-12),
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(PedError::InvalidConfig(m.to_string()));
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return bad("line search constants must satisfy 0 < c1 < c2 < 1");
        }
        if self.memory == 0 {
            return bad("memory must be at least 1");
        }
        if self.stall_window == 0 || self.max_line_search == 0 {
            return bad("stall window and line-search budget must be positive");
        }
        if !(self.grad_tol > 0.0 && self.obj_tol >= 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.smoothing_eps >= 0.0) {
            return bad("smoothing must be non-negative");
        }
        if self.final_smoothing_eps.is_some_and(|e| !(0.0..=self.smoothing_eps).contains(&e)) {
            return bad("final smoothing must lie in [0, smoothing_eps]");
        }
        Ok(())
    }

    /// Tighter settings used when a result is checked against optimality conditions.
    pub fn tight() -> Self {
        Self { grad_tol: 1e-9, max_iters: 20_000, obj_tol: 1e-15, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    GradientTolerance,
    /// No meaningful decrease over the stall window, or no decrease possible along
    /// the steepest-descent direction.
    ObjectiveStall,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct OptimizerReport {
    pub beta_opt: Array1<f64>,
    pub iterations: usize,
    pub final_grad_norm: f64,
    pub converged: bool,
    pub termination: Termination,
    /// Objective after every accepted line-search step, starting at the initial
    /// point. Exact for the orthant-wise strategy, smoothed otherwise. Final
    /// pseudo-gradient steps are not recorded.
    pub objective_trace: Vec<f64>,
}

impl OptimizerReport {
    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace is never empty")
    }
}

struct History {
    pairs: VecDeque<(Array1<f64>, Array1<f64>, f64)>,
    cap: usize,
}

impl History {
    fn new(cap: usize) -> Self {
        Self { pairs: VecDeque::with_capacity(cap), cap }
    }

    fn push(&mut self, s: Array1<f64>, y: Array1<f64>) -> bool {
        let sy = s.dot(&y);
        if !(sy > MIN_CURVATURE * l2_norm(s.view()) * l2_norm(y.view())) {
            return false;
        }
        if self.pairs.len() == self.cap {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
        true
    }

    /// Two-loop recursion: returns `−H·g`.
    fn direction(&self, g: &Array1<f64>) -> Array1<f64> {
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * s.dot(&q);
            q.scaled_add(-a, y);
            alphas.push(a);
        }
        if let Some((s, y, _)) = self.pairs.back() {
            q *= s.dot(y) / y.dot(y);
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.into_iter().rev()) {
            let b = rho * y.dot(&q);
            q.scaled_add(a - b, s);
        }
        q.mapv_inplace(|v| -v);
        q
    }
}

struct Trial {
    alpha: f64,
    f: f64,
    g: Option<Array1<f64>>,
    dphi: f64,
}

struct LineSearch<'o, 'a> {
    obj: &'o SmoothedObjective<'a>,
    x: &'o Array1<f64>,
    d: &'o Array1<f64>,
    f0: f64,
    dphi0: f64,
    c1: f64,
    c2: f64,
    evals: usize,
    max_evals: usize,
}

impl LineSearch<'_, '_> {
    fn eval(&mut self, alpha: f64) -> Result<Trial> {
        self.evals += 1;
        let mut xt = self.x.clone();
        xt.scaled_add(alpha, self.d);
        match self.obj.evaluate(xt.view()) {
            Ok((f, g)) => {
                let dphi = g.dot(self.d);
                Ok(Trial { alpha, f, g: Some(g), dphi })
            }
            Err(e @ PedError::InterpolationRegime { .. }) => {
                let f = self.obj.value(xt.view())?;
                if f < self.f0 && f <= self.f0 + self.c1 * alpha * self.dphi0 {
                    return Err(e);
                }
                Ok(Trial { alpha, f: f64::INFINITY, g: None, dphi: f64::NAN })
            }
            Err(e) => Err(e),
        }
    }

    fn armijo(&self, t: &Trial) -> bool {
        t.f <= self.f0 + self.c1 * t.alpha * self.dphi0
    }

    fn curvature(&self, t: &Trial) -> bool {
        t.dphi.abs() <= -self.c2 * self.dphi0
    }

    /// Strong-Wolfe step, or the best sufficient-decrease step found, or `None`.
    fn run(mut self, alpha_init: f64) -> Result<Option<Trial>> {
        let mut prev = Trial { alpha: 0.0, f: self.f0, g: None, dphi: self.dphi0 };
        let mut alpha = alpha_init;
        let mut first = true;
        while self.evals < self.max_evals {
            let t = self.eval(alpha)?;
            if !self.armijo(&t) || (!first && t.f >= prev.f) {
                return self.zoom(prev, t);
            }
            if self.curvature(&t) {
                return Ok(Some(t));
            }
            if t.dphi >= 0.0 {
                return self.zoom(t, prev);
            }
            first = false;
            alpha = t.alpha * 2.0;
            prev = t;
        }
        Ok((prev.alpha > 0.0).then_some(prev))
    }

    fn zoom(&mut self, mut lo: Trial, mut hi: Trial) -> Result<Option<Trial>> {
        while self.evals < self.max_evals {
            let width = (hi.alpha - lo.alpha).abs();
            if width <= 1e-16 * lo.alpha.abs().max(hi.alpha.abs()).max(1e-300) {
                break;
            }
            let alpha = interpolate(&lo, &hi);
            let t = self.eval(alpha)?;
            if !self.armijo(&t) || t.f >= lo.f {
                hi = t;
            } else {
                if self.curvature(&t) {
                    return Ok(Some(t));
                }
                if t.dphi * (hi.alpha - lo.alpha) >= 0.0 {
                    hi = std::mem::replace(&mut lo, t);
                } else {
                    lo = t;
                }
            }
        }
        Ok((lo.alpha > 0.0 && lo.f < self.f0).then_some(lo))
    }
}

/// Cubic interpolation minimizer between the bracket ends, safeguarded to the
/// middle 80% of the bracket; falls back to bisection.
fn interpolate(lo: &Trial, hi: &Trial) -> f64 {
    let (a, b) = (lo.alpha, hi.alpha);
    let (left, right) = if a < b { (a, b) } else { (b, a) };
    let margin = 0.1 * (right - left);
    let mid = 0.5 * (a + b);
    if !(lo.f.is_finite() && hi.f.is_finite() && lo.dphi.is_finite() && hi.dphi.is_finite()) {
        return mid;
    }
    let d1 = lo.dphi + hi.dphi - 3.0 * (lo.f - hi.f) / (a - b);
    let disc = d1 * d1 - lo.dphi * hi.dphi;
    if disc < 0.0 {
        return mid;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let denom = hi.dphi - lo.dphi + 2.0 * d2;
    if denom == 0.0 {
        return mid;
    }
    let t = b - (b - a) * (hi.dphi + d2 - d1) / denom;
    if !t.is_finite() {
        return mid;
    }
    t.clamp(left + margin, right - margin)
}

fn inf_norm(v: &Array1<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

struct StageOutcome {
    x: Array1<f64>,
    grad_norm: f64,
    iterations: usize,
    termination: Termination,
}

fn run_stage(
    obj: &SmoothedObjective<'_>,
    mut x: Array1<f64>,
    cfg: &OptimizerConfig,
    budget: usize,
    trace: &mut Vec<f64>,
) -> Result<StageOutcome> {
    let (mut f, mut g) = obj.evaluate(x.view())?;
    // Shrinking ε can only lower the smoothed objective, so the trace stays monotone.
    trace.push(f);
    let stage_start = trace.len() - 1;
    let mut history = History::new(cfg.memory);
    let mut iterations = 0;

    let termination = loop {
        if inf_norm(&g) <= cfg.grad_tol {
            break Termination::GradientTolerance;
        }
        if iterations >= budget {
            break Termination::MaxIterations;
        }

        let mut d = history.direction(&g);
        let mut dphi0 = g.dot(&d);
        if !(dphi0 < 0.0) {
            history.pairs.clear();
            d = g.mapv(|v| -v);
            dphi0 = g.dot(&d);
        }
        let alpha_init = if history.pairs.is_empty() { (1.0 / inf_norm(&g)).min(1.0) } else { 1.0 };
        let search = LineSearch {
            obj,
            x: &x,
            d: &d,
            f0: f,
            dphi0,
            c1: cfg.c1,
            c2: cfg.c2,
            evals: 0,
            max_evals: cfg.max_line_search,
        };
        let step = match search.run(alpha_init)? {
            Some(step) => step,
            None if !history.pairs.is_empty() => {
                history.pairs.clear();
                continue;
            }
            None => break Termination::ObjectiveStall,
        };

        let Trial { alpha, f: f_new, g: g_new, .. } = step;
        let g_new = g_new.expect("accepted steps carry a gradient");
        let s = &d * alpha;
        let y = &g_new - &g;
        x += &s;
        history.push(s, y);
        f = f_new;
        g = g_new;
        iterations += 1;
        trace.push(f);
        if stalled(trace, stage_start, cfg) {
            break Termination::ObjectiveStall;
        }
    };

    Ok(StageOutcome { grad_norm: inf_norm(&g), x, iterations, termination })
}

/// Gradient of the objective restricted to the orthant `xi`, where the ℓ₁ norm is linear.
/// `None` at `β = 0`, where the restriction is not differentiable.
fn orthant_gradient(beta: &Array1<f64>, loss_grad: &Array1<f64>, xi: &Array1<f64>, lambda: f64) -> Option<Array1<f64>> {
    let a = l1_norm(beta.view());
    let b = l2_norm(beta.view());
    if b == 0.0 {
        return None;
    }
    let scale = 0.5 * lambda / (a * b).sqrt();
    let mut g = loss_grad.clone();
    Zip::from(&mut g).and(beta).and(xi).for_each(|g, &bj, &s| {
        *g += scale * (s * b + a * bj / b);
    });
    Some(g)
}

fn project(x: &mut Array1<f64>, xi: &Array1<f64>) {
    Zip::from(x).and(xi).for_each(|v, &s| {
        if *v * s <= 0.0 {
            *v = 0.0;
        }
    });
}

fn stalled(trace: &[f64], stage_start: usize, cfg: &OptimizerConfig) -> bool {
    let done = trace.len() - 1 - stage_start;
    if done < cfg.stall_window {
        return false;
    }
    let f = trace[trace.len() - 1];
    let earlier = trace[trace.len() - 1 - cfg.stall_window];
    earlier - f <= cfg.obj_tol * f.abs().max(1.0)
}

const POLISH_STEPS: usize = 50;
const POLISH_SLACK: f64 = 8.0 * f64::EPSILON;

fn run_orthant_wise(
    problem: &Problem<'_>,
    lambda: f64,
    mut x: Array1<f64>,
    cfg: &OptimizerConfig,
    trace: &mut Vec<f64>,
) -> Result<StageOutcome> {
    let (mut f, mut loss) = exact_value_and_loss_gradient(problem, x.view(), lambda)?;
    let mut pg = pseudo_gradient_from_loss(x.view(), &loss, lambda);
    trace.push(f);

    // Iterates approach an optimal zero along a ray and never reach it, so test it first.
    let zero = Array1::zeros(x.len());
    let (f0, loss0) = exact_value_and_loss_gradient(problem, zero.view(), lambda)?;
    if pseudo_gradient_from_loss(zero.view(), &loss0, lambda).iter().all(|&g| g == 0.0) {
        if f0 < f {
            trace.push(f0);
        }
        return Ok(StageOutcome { grad_norm: 0.0, x: zero, iterations: 0, termination: Termination::GradientTolerance });
    }
    let mut history = History::new(cfg.memory);
    let mut iterations = 0;
    // Once sufficient decrease is below the resolution of f, steps are judged by
    // the pseudo-gradient instead.
    let mut polish_steps: Option<usize> = None;

    let termination = loop {
        if inf_norm(&pg) <= cfg.grad_tol {
            break Termination::GradientTolerance;
        }
        if iterations >= cfg.max_iters {
            break Termination::MaxIterations;
        }
        if polish_steps.is_some_and(|k| k >= POLISH_STEPS) {
            break Termination::ObjectiveStall;
        }

        let xi = Zip::from(&x).and(&pg).map_collect(|&v, &g| if v != 0.0 { v.signum() } else if g != 0.0 { -g.signum() } else { 0.0 });
        let mut d = history.direction(&pg);
        Zip::from(&mut d).and(&pg).for_each(|d, &g| {
            if *d * g >= 0.0 {
                *d = 0.0;
            }
        });
        if !(pg.dot(&d) < 0.0) {
            history.pairs.clear();
            d = pg.mapv(|v| -v);
        }

        let mut alpha = if history.pairs.is_empty() { (1.0 / inf_norm(&pg)).min(1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..cfg.max_line_search {
            let mut xt = x.clone();
            xt.scaled_add(alpha, &d);
            project(&mut xt, &xi);
            let decrease = pg.dot(&(&xt - &x));
            match exact_value_and_loss_gradient(problem, xt.view(), lambda) {
                Ok((ft, lt)) => {
                    let ok = match polish_steps {
                        None => ft < f && ft <= f + cfg.c1 * decrease,
                        Some(_) => {
                            ft <= f + POLISH_SLACK * f.abs().max(1.0)
                                && l2_norm(pseudo_gradient_from_loss(xt.view(), &lt, lambda).view()) < l2_norm(pg.view())
                        }
                    };
                    if ok {
                        accepted = Some((xt, ft, lt));
                        break;
                    }
                }
                Err(e @ PedError::InterpolationRegime { .. }) => {
                    // Descending into the guard means the minimizer interpolates.
                    let ft = ped_objective(problem, xt.view(), lambda)?.objective;
                    if ft < f && ft <= f + cfg.c1 * decrease {
                        return Err(e);
                    }
                }
                Err(e) => return Err(e),
            }
            alpha *= 0.5;
        }
        let Some((x_new, f_new, loss_new)) = accepted else {
            if !history.pairs.is_empty() {
                history.pairs.clear();
                continue;
            }
            if polish_steps.is_none() {
                polish_steps = Some(0);
                continue;
            }
            break Termination::ObjectiveStall;
        };

        if let (Some(g_old), Some(g_new)) = (
            orthant_gradient(&x, &loss, &xi, lambda),
            orthant_gradient(&x_new, &loss_new, &xi, lambda),
        ) {
            history.push(&x_new - &x, g_new - g_old);
        }
        pg = pseudo_gradient_from_loss(x_new.view(), &loss_new, lambda);
        x = x_new;
        f = f_new;
        loss = loss_new;
        iterations += 1;
        match polish_steps.as_mut() {
            Some(k) => *k += 1,
            None => {
                trace.push(f);
                if stalled(trace, 0, cfg) {
                    polish_steps = Some(0);
                }
            }
        }
    };

    Ok(StageOutcome { grad_norm: inf_norm(&pg), x, iterations, termination })
}

/// Minimize the objective at `lambda` from `init` with the configured strategy.
///
/// Exhausting the iteration budget is not an error: the report carries
/// `converged = false` and the best iterate.
pub fn minimize(
    problem: &Problem<'_>,
    lambda: f64,
    init: ArrayView1<'_, f64>,
    cfg: &OptimizerConfig,
) -> Result<OptimizerReport> {
    cfg.validate()?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(PedError::InvalidConfig(format!("lambda must be finite and non-negative, got {lambda}")));
    }
    if init.len() != problem.p() {
        return Err(PedError::DimensionMismatch { expected: problem.p(), found: init.len() });
    }
    if init.iter().any(|v| !v.is_finite()) {
        return Err(PedError::NonFinite("initial coefficients".into()));
    }

    let mut trace = Vec::new();
    let (out, iterations) = match cfg.strategy {
        Strategy::OrthantWise => {
            let out = run_orthant_wise(problem, lambda, init.to_owned(), cfg, &mut trace)?;
            let it = out.iterations;
            (out, it)
        }
        Strategy::Smoothed => {
            let main = SmoothedObjective::new(*problem, lambda, cfg.smoothing_eps);
            let mut out = run_stage(&main, init.to_owned(), cfg, cfg.max_iters, &mut trace)?;
            let mut iterations = out.iterations;
            if let Some(eps) = cfg.final_smoothing_eps.filter(|&e| e != cfg.smoothing_eps) {
                let refine = SmoothedObjective::new(*problem, lambda, eps);
                let budget = cfg.max_iters.saturating_sub(iterations);
                out = run_stage(&refine, out.x, cfg, budget, &mut trace)?;
                iterations += out.iterations;
            }
            (out, iterations)
        }
    };

    Ok(OptimizerReport {
        beta_opt: out.x,
        iterations,
        final_grad_norm: out.grad_norm,
        converged: out.termination != Termination::MaxIterations,
        termination: out.termination,
        objective_trace: trace,
    })
}
