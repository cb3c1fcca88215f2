//! The full fitting procedure.
//!
//! For every `(λ₀, C)` on the grid:
//!
//! 1. minimize the objective over all columns at `λ₀`;
//! 2. screen out every column whose relative magnitude `|βⱼ|/‖β‖` falls
//!    below `C/√n`;
//! 3. optionally repeat (minimize at `λᵢ = λ₀·2⁻ⁱ`, screen) on the survivors;
//! 4. refit the survivors at `λ_F`, the theoretical `λ` with `p` replaced by the
//!    number of survivors `p*`.
//!
//! By default the grid point whose step-1 solution has the largest `k̂` wins;
//! the `k̂` of the refit or the AIC of the refit can be used instead. Points
//! whose screen was degenerate or whose refit is zero rank below all others. Ties go to the
//! smallest `λ₀`, then the smallest `C`.

use ndarray::{Array1, ArrayView1, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{Problem, StandardizedDataset};
use crate::error::{PedError, Result};
use crate::objective::{k_hat, l2_norm, ped_objective};
use crate::optimizer::{minimize, OptimizerConfig, OptimizerReport};

/// `λ = (c·p^{1/4}/√n)·Φ⁻¹(1 − α/(2p))`.
///
/// With this choice `λ ≥ c·p^{1/4}·‖Xᵀε‖_∞/‖ε‖` holds with probability
/// `1 − α` under Gaussian noise.
pub fn theoretical_lambda(n: usize, p: usize, alpha: f64, c: f64) -> f64 {
    assert!(n >= 1 && p >= 1, "n and p must be positive");
    let tail = alpha / (2.0 * p as f64);
    // Φ⁻¹(1 − t) = −Φ⁻¹(t) avoids cancellation for small t.
    let quantile = -Normal::standard().inverse_cdf(tail);
    c * (p as f64).powf(0.25) / (n as f64).sqrt() * quantile
}

/// Regularization for the final refit on `p_star` surviving columns.
pub fn lambda_f(n: usize, p_star: usize, alpha: f64, c: f64) -> f64 {
    theoretical_lambda(n, p_star, alpha, c)
}

/// The theoretical screening constant shape `√(p*·ln(2p/α))`, for diagnostics.
pub fn theoretical_c(p: usize, p_star: usize, alpha: f64) -> f64 {
    (p_star as f64 * (2.0 * p as f64 / alpha).ln()).sqrt()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Screening {
    /// Indices with `|βⱼ|/‖β‖ < C/√n`.
    pub irrelevant: Vec<usize>,
    pub retained: Vec<usize>,
}

impl Screening {
    /// Every index was screened out.
    pub fn is_degenerate(&self) -> bool {
        self.retained.is_empty()
    }
}

/// Split indices into irrelevant and retained by relative magnitude.
pub fn screen(beta: ArrayView1<'_, f64>, c: f64, n: usize) -> Result<Screening> {
    let norm = l2_norm(beta);
    if norm == 0.0 {
        return Err(PedError::ZeroCoefficients("screening"));
    }
    let threshold = c / (n as f64).sqrt();
    let (irrelevant, retained) = (0..beta.len()).partition(|&j| beta[j].abs() / norm < threshold);
    Ok(Screening { irrelevant, retained })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    /// Maximize `k̂` of the step-1 solution at `λ₀`; ties fall to the smallest `C`.
    #[serde(rename = "khat")]
    MaximizeKHat,
    /// Maximize `k̂` of the screened refit.
    #[serde(rename = "khat-refit")]
    MaximizeRefitKHat,
    /// Minimize `n·ln(‖r‖²/n) + 2·|active set|`.
    Aic,
}

impl std::str::FromStr for Selection {
    type Err = PedError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "khat" | "k_hat" | "maximize_k_hat" => Ok(Selection::MaximizeKHat),
            "khat-refit" | "khat_refit" => Ok(Selection::MaximizeRefitKHat),
            "aic" => Ok(Selection::Aic),
            other => Err(PedError::InvalidConfig(format!("unknown selection '{other}'"))),
        }
    }
}

impl std::fmt::Display for Selection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Selection::MaximizeKHat => "khat",
            Selection::MaximizeRefitKHat => "khat-refit",
            Selection::Aic => "aic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PedConfig {
    pub lambda_grid: Vec<f64>,
    pub c_grid: Vec<f64>,
    /// Confidence level of the theoretical `λ`.
    pub alpha: f64,
    /// Multiplier `c > 1` of the theoretical `λ`.
    pub c: f64,
    /// Extra screening rounds; 0 is the one-pass method.
    pub iterative_rounds: usize,
    pub selection: Selection,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
}

impl Default for PedConfig {
    fn default() -> Self {
        Self {
            lambda_grid: vec![0.2, 0.5, 1.0],
            c_grid: vec![0.75, 1.0, 1.25, 1.5],
            alpha: 0.05,
            c: 1.1,
            iterative_rounds: 0,
            selection: Selection::MaximizeKHat,
            optimizer: OptimizerConfig::default(),
            seed: 0,
        }
    }
}

impl PedConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PedError::InvalidConfig(m));
        if self.lambda_grid.is_empty() || self.c_grid.is_empty() {
            return bad("grids must be non-empty".into());
        }
        if let Some(l) = self.lambda_grid.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return bad(format!("lambda grid values must be positive, got {l}"));
        }
        if let Some(c) = self.c_grid.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
            return bad(format!("C grid values must be positive, got {c}"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(self.c > 1.0 && self.c.is_finite()) {
            return bad(format!("c must exceed 1, got {}", self.c));
        }
        self.optimizer.validate()
    }

    /// A copy with a single grid point.
    pub fn with_fixed_grid(&self, lambda0: f64, c: f64) -> Self {
        Self { lambda_grid: vec![lambda0], c_grid: vec![c], ..self.clone() }
    }
}

/// One `(round, kept)` entry; round 0 is the full design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScreeningRound {
    pub round: usize,
    pub kept: usize,
}

/// Outcome of the whole procedure, in standardized coordinates.
#[derive(Debug, Clone)]
pub struct FitResult {
    /// Length `p`; exact zeros outside `active_set`.
    pub beta: Array1<f64>,
    /// Standardized column indices that survived screening.
    pub active_set: Vec<usize>,
    pub lambda0: f64,
    pub c_threshold: f64,
    pub lambda_final: f64,
    pub k_hat_final: f64,
    pub residual_norm: f64,
    /// `x_jᵀr/‖r‖` for all `p` columns at the final residual.
    pub cosines: Array1<f64>,
    pub screening_history: Vec<ScreeningRound>,
    /// Some screening round removed every column and the largest one was kept.
    pub degenerate_screen: bool,
    pub optimizer_reports: Vec<OptimizerReport>,
    /// Score of the chosen grid point under the configured selection rule.
    pub selection_score: f64,
    pub grid: Vec<GridPoint>,
}

impl FitResult {
    /// Number of nonzero coefficients; the refit may zero some active columns.
    pub fn model_size(&self) -> usize {
        self.beta.iter().filter(|&&b| b != 0.0).count()
    }
}

/// Summary of one evaluated grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub lambda0: f64,
    pub c_threshold: f64,
    pub kept: usize,
    /// `k̂` of the step-1 solution at `λ₀`, `-inf` when it is zero.
    pub initial_k_hat: f64,
    /// `k̂` of the refit, `-inf` when it is zero.
    pub k_hat: f64,
    pub aic: f64,
    /// Screening removed every column at some round.
    pub degenerate: bool,
}

/// `n·ln(‖r‖²/n) + 2·df`.
pub fn aic_from_parts(n: usize, residual_norm: f64, df: usize) -> f64 {
    let n = n as f64;
    n * (residual_norm * residual_norm / n).ln() + 2.0 * df as f64
}

pub fn aic_score(ds: &StandardizedDataset, fit: &FitResult) -> Result<f64> {
    if !(fit.residual_norm > 0.0) {
        return Err(PedError::InterpolationRegime {
            residual: fit.residual_norm,
            guard: crate::objective::RESIDUAL_GUARD,
        });
    }
    Ok(aic_from_parts(ds.n(), fit.residual_norm, fit.active_set.len()))
}

struct Candidate {
    lambda0: f64,
    c_threshold: f64,
    active: Vec<usize>,
    beta_active: Array1<f64>,
    lambda_final: f64,
    initial_k_hat: f64,
    k_hat: f64,
    residual_norm: f64,
    aic: f64,
    history: Vec<ScreeningRound>,
    degenerate: bool,
    reports: Vec<OptimizerReport>,
}

impl Candidate {
    fn unusable(&self) -> bool {
        self.degenerate || self.beta_active.iter().all(|&b| b == 0.0)
    }
}

fn restricted_fit(problem: &Problem<'_>, cols: &[usize], lambda: f64, cfg: &OptimizerConfig) -> Result<OptimizerReport> {
    let x = problem.x.select(Axis(1), cols);
    let sub = Problem::new(x.view(), problem.y)?;
    let init = sub.correlations();
    minimize(&sub, lambda, init.view(), cfg)
}

/// Screen `beta` (indexed like `cols`), mapping survivors back to `cols`' indices.
/// An empty screen keeps the single largest coefficient; when `beta = 0` the
/// column most correlated with the response is kept instead.
fn screen_subset(
    problem: &Problem<'_>,
    beta: &Array1<f64>,
    cols: &[usize],
    c: f64,
    n: usize,
) -> Result<(Vec<usize>, bool)> {
    let s = match screen(beta.view(), c, n) {
        Ok(s) => s,
        Err(PedError::ZeroCoefficients(_)) => Screening { irrelevant: (0..beta.len()).collect(), retained: Vec::new() },
        Err(e) => return Err(e),
    };
    if s.is_degenerate() {
        let weight: Array1<f64> = if beta.iter().all(|&b| b == 0.0) {
            cols.iter().map(|&j| problem.x.column(j).dot(&problem.y)).collect()
        } else {
            beta.clone()
        };
        let top = (0..weight.len())
            .max_by(|&a, &b| weight[a].abs().total_cmp(&weight[b].abs()).then(b.cmp(&a)))
            .expect("non-empty");
        log::warn!("screening at C = {c} removed every column; keeping column {}", cols[top]);
        return Ok((vec![cols[top]], true));
    }
    Ok((s.retained.iter().map(|&k| cols[k]).collect(), false))
}

fn evaluate_candidate(
    problem: &Problem<'_>,
    step1: &OptimizerReport,
    lambda0: f64,
    c: f64,
    cfg: &PedConfig,
) -> Result<Candidate> {
    let n = problem.n();
    let all: Vec<usize> = (0..problem.p()).collect();
    let mut history = vec![ScreeningRound { round: 0, kept: problem.p() }];
    let mut reports = Vec::new();

    let (mut active, mut degenerate) = screen_subset(problem, &step1.beta_opt, &all, c, n)?;
    history.push(ScreeningRound { round: 1, kept: active.len() });

    for round in 1..=cfg.iterative_rounds {
        let lambda_i = lambda0 * 0.5f64.powi(round as i32);
        let rep = restricted_fit(problem, &active, lambda_i, &cfg.optimizer)?;
        let (next, deg) = screen_subset(problem, &rep.beta_opt, &active, c, n)?;
        degenerate |= deg;
        active = next;
        history.push(ScreeningRound { round: round + 1, kept: active.len() });
        reports.push(rep);
    }

    let lambda_final = lambda_f(n, active.len(), cfg.alpha, cfg.c);
    let rep = restricted_fit(problem, &active, lambda_final, &cfg.optimizer)?;
    let beta_active = rep.beta_opt.clone();
    let k = k_hat(beta_active.view()).unwrap_or(f64::NEG_INFINITY);
    let x = problem.x.select(Axis(1), &active);
    let r = &problem.y - &x.dot(&beta_active);
    let residual_norm = r.dot(&r).sqrt();
    reports.push(rep);

    Ok(Candidate {
        lambda0,
        c_threshold: c,
        aic: aic_from_parts(n, residual_norm, active.len()),
        active,
        beta_active,
        lambda_final,
        initial_k_hat: k_hat(step1.beta_opt.view()).unwrap_or(f64::NEG_INFINITY),
        k_hat: k,
        residual_norm,
        history,
        degenerate,
        reports,
    })
}

/// Run the grid search, screening and final refit on a standardized dataset.
pub fn ped_fit(ds: &StandardizedDataset, cfg: &PedConfig) -> Result<FitResult> {
    ped_fit_problem(&ds.problem(), cfg)
}

/// [`ped_fit`] on a bare design/response pair (assumed standardized).
pub fn ped_fit_problem(problem: &Problem<'_>, cfg: &PedConfig) -> Result<FitResult> {
    cfg.validate()?;
    if l2_norm(problem.y) <= crate::objective::RESIDUAL_GUARD {
        return Err(PedError::Degenerate("response is identically zero".into()));
    }
    let init = problem.correlations();
    if l2_norm(init.view()) == 0.0 {
        return Err(PedError::Degenerate("response is orthogonal to every column".into()));
    }

    let step1: Vec<OptimizerReport> = cfg
        .lambda_grid
        .par_iter()
        .map(|&lambda0| minimize(problem, lambda0, init.view(), &cfg.optimizer))
        .collect::<Result<_>>()?;

    let pairs: Vec<(usize, f64)> = (0..cfg.lambda_grid.len())
        .flat_map(|li| cfg.c_grid.iter().map(move |&c| (li, c)))
        .collect();
    let candidates: Vec<Candidate> = pairs
        .par_iter()
        .map(|&(li, c)| evaluate_candidate(problem, &step1[li], cfg.lambda_grid[li], c, cfg))
        .collect::<Result<_>>()?;

    let score = |cand: &Candidate| match cfg.selection {
        Selection::MaximizeKHat => cand.initial_k_hat,
        Selection::MaximizeRefitKHat => cand.k_hat,
        Selection::Aic => -cand.aic,
    };
    let best = candidates
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| {
            // A degenerate screen leaves one column, whose k̂ is trivially 1; a null
            // refit leaves no model at all.
            b.unusable()
                .cmp(&a.unusable())
                .then(score(a).total_cmp(&score(b)))
                .then(b.lambda0.total_cmp(&a.lambda0))
                .then(b.c_threshold.total_cmp(&a.c_threshold))
        })
        .map(|(i, _)| i)
        .expect("grid is non-empty");

    let grid = candidates
        .iter()
        .map(|c| GridPoint {
            lambda0: c.lambda0,
            c_threshold: c.c_threshold,
            kept: c.active.len(),
            initial_k_hat: c.initial_k_hat,
            k_hat: c.k_hat,
            aic: c.aic,
            degenerate: c.degenerate,
        })
        .collect();

    let chosen = candidates.into_iter().nth(best).expect("index in range");
    let li = cfg.lambda_grid.iter().position(|&l| l == chosen.lambda0).expect("grid value");
    let mut beta = Array1::zeros(problem.p());
    for (k, &j) in chosen.active.iter().enumerate() {
        beta[j] = chosen.beta_active[k];
    }
    let parts = ped_objective(problem, beta.view(), chosen.lambda_final)?;
    let cosines = parts.cosines.unwrap_or_else(|| Array1::zeros(problem.p()));
    let selection_score = match cfg.selection {
        Selection::MaximizeKHat => chosen.initial_k_hat,
        Selection::MaximizeRefitKHat => chosen.k_hat,
        Selection::Aic => chosen.aic,
    };
    let mut reports = vec![step1[li].clone()];
    reports.extend(chosen.reports);

    Ok(FitResult {
        beta,
        active_set: chosen.active,
        lambda0: chosen.lambda0,
        c_threshold: chosen.c_threshold,
        lambda_final: chosen.lambda_final,
        k_hat_final: chosen.k_hat,
        residual_norm: chosen.residual_norm,
        cosines,
        screening_history: chosen.history,
        degenerate_screen: chosen.degenerate,
        optimizer_reports: reports,
        selection_score,
        grid,
    })
}
