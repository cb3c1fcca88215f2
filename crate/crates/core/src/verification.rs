//! Executable checks of the structural properties of the PED minimizer.
//!
//! Every check runs against the numerical minimizer, so each assertion carries
//! an explicit slack. [`VerifyConfig::tol_scale`] multiplies all slacks at once.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::algorithm::PedConfig;
use crate::data::{Problem, RawDataset, StandardizedDataset};
use crate::error::{PedError, Result};
use crate::objective::{dual_norm, geometric_mean_norm, k_hat, l1_norm, l2_norm, ped_gradient, ped_objective, SmoothedObjective};
use crate::optimizer::{minimize, OptimizerConfig};
use crate::simulation::{generate_design, run_study, SimulationSpec};

/// Slack in the pass flag of a [`GroupingPair`].
pub const GROUPING_REPORT_SLACK: f64 = 1e-8;

/// Names accepted by [`VerifyConfig::only`].
pub const CHECK_GROUPS: [&str; 9] =
    ["norm", "gradient", "oracle", "identical", "grouping", "kkt", "sign", "convergence", "rate"];

fn normal_vec<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Array1<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn center_normalize(v: &mut Array1<f64>) {
    let mean = v.mean().unwrap_or(0.0);
    *v -= mean;
    let norm = l2_norm(v.view());
    *v /= norm;
}

/// Correlated Gaussian design with a sparse random signal, standardized.
pub fn random_instance<R: Rng + ?Sized>(
    n: usize,
    p: usize,
    rho: f64,
    sparsity: usize,
    sigma: f64,
    rng: &mut R,
) -> Result<StandardizedDataset> {
    let x = generate_design(n, p, rho, rng);
    let mut beta = Array1::zeros(p);
    for j in sample(rng, p, sparsity.min(p)) {
        let magnitude: f64 = rng.random_range(0.5..2.0);
        beta[j] = if rng.random::<bool>() { magnitude } else { -magnitude };
    }
    let y = x.dot(&beta) + normal_vec(n, rng) * sigma;
    RawDataset::new(x, y, None)?.standardize()
}

/// Random design whose column `j` is an exact copy of column `i`.
///
/// With `signal` the response loads on the duplicated pair; otherwise it loads
/// only on the remaining columns.
pub fn identical_columns_instance<R: Rng + ?Sized>(
    n: usize,
    p: usize,
    (i, j): (usize, usize),
    signal: bool,
    rng: &mut R,
) -> Result<StandardizedDataset> {
    assert!(i != j && i < p && j < p, "pair must name two distinct columns");
    let mut x = generate_design(n, p, 0.3, rng);
    let copy = x.column(i).to_owned();
    x.column_mut(j).assign(&copy);
    let mut beta = Array1::<f64>::zeros(p);
    if signal {
        beta[i] = 1.5;
        beta[j] = 1.0;
    } else {
        let other = (0..p).find(|&k| k != i && k != j).expect("p >= 3");
        beta[other] = 1.5;
    }
    let y = x.dot(&beta) + normal_vec(n, rng) * 0.5;
    RawDataset::new(x, y, None)?.standardize()
}

/// Standardized design whose first two columns have sample correlation exactly `rho`.
pub fn correlated_pair_instance<R: Rng + ?Sized>(n: usize, p: usize, rho: f64, rng: &mut R) -> Result<StandardizedDataset> {
    assert!(p >= 2, "need at least two columns");
    let mut x: Array2<f64> = generate_design(n, p, 0.2, rng);
    let mut e0 = x.column(0).to_owned();
    center_normalize(&mut e0);
    let mut e1 = x.column(1).to_owned();
    e1 -= e1.mean().unwrap_or(0.0);
    let proj = e1.dot(&e0);
    e1.scaled_add(-proj, &e0);
    center_normalize(&mut e1);
    x.column_mut(0).assign(&e0);
    x.column_mut(1).assign(&(&e0 * rho + &e1 * (1.0 - rho * rho).sqrt()));
    for mut col in x.axis_iter_mut(Axis(1)).skip(2) {
        let mut c = col.to_owned();
        center_normalize(&mut c);
        col.assign(&c);
    }
    let mut y = (&x.column(0) + &x.column(1)) * 3.0;
    if p > 2 {
        y.scaled_add(1.0, &x.column(p - 1));
    }
    y += &(normal_vec(n, rng) * 0.05);
    y -= y.mean().unwrap_or(0.0);
    StandardizedDataset::from_standardized(x, y)
}

/// Exhaustive grid minimum of the objective over `[−half_width, half_width]^p`.
pub fn brute_force_minimize(
    problem: &Problem<'_>,
    lambda: f64,
    half_width: f64,
    points_per_axis: usize,
) -> Result<(Array1<f64>, f64)> {
    let p = problem.p();
    if p > 3 {
        return Err(PedError::InvalidConfig(format!("brute force supports p <= 3, got {p}")));
    }
    if points_per_axis < 2 || !(half_width > 0.0) {
        return Err(PedError::InvalidConfig("grid needs at least two points and a positive width".into()));
    }
    let step = 2.0 * half_width / (points_per_axis - 1) as f64;
    let axis: Vec<f64> = (0..points_per_axis).map(|k| -half_width + step * k as f64).collect();
    let total = points_per_axis.pow(p as u32);
    let eval = |idx: usize| {
        let mut beta = Array1::zeros(p);
        let mut rest = idx;
        for b in beta.iter_mut() {
            *b = axis[rest % points_per_axis];
            rest /= points_per_axis;
        }
        let r = &problem.y - &problem.x.dot(&beta);
        let f = l2_norm(r.view()) + lambda * geometric_mean_norm(beta.view());
        (f, beta)
    };
    let (f, beta) = (0..total)
        .into_par_iter()
        .map(eval)
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("grid is non-empty");
    Ok((beta, f))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdenticalColumnsReport {
    pub lambda: f64,
    pub beta_i: f64,
    pub beta_j: f64,
    /// `|β̂ᵢ − β̂ⱼ| / max(‖β̂‖, 1)`.
    pub scaled_difference: f64,
    pub passed: bool,
}

/// Solve at `lambda` from a deliberately asymmetric start and compare the coefficients
/// of the duplicated pair.
pub fn check_identical_columns(
    problem: &Problem<'_>,
    (i, j): (usize, usize),
    lambda: f64,
    cfg: &OptimizerConfig,
    tol: f64,
) -> Result<IdenticalColumnsReport> {
    let mut init = problem.correlations();
    init[i] *= 2.0;
    init[j] *= -0.5;
    let report = minimize(problem, lambda, init.view(), cfg)?;
    let beta = &report.beta_opt;
    let scaled_difference = (beta[i] - beta[j]).abs() / l2_norm(beta.view()).max(1.0);
    Ok(IdenticalColumnsReport {
        lambda,
        beta_i: beta[i],
        beta_j: beta[j],
        scaled_difference,
        passed: scaled_difference <= tol,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupingPair {
    pub i: usize,
    pub j: usize,
    pub rho: f64,
    /// `|β̂ᵢ − β̂ⱼ| / ‖β̂‖`.
    pub d_lambda: f64,
    /// `(2/λ)·√(2(1−ρ))`.
    pub bound: f64,
    /// `2·√(1−ρ)/λ`, logged for comparison.
    pub stated_bound: f64,
    pub pass: bool,
    pub stated_pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupingCheckReport {
    pub lambda: f64,
    pub pairs: Vec<GroupingPair>,
}

impl GroupingCheckReport {
    /// All pairs satisfy the bound with the given extra slack.
    pub fn holds_within(&self, slack: f64) -> bool {
        self.pairs.iter().all(|p| p.d_lambda <= p.bound + slack)
    }
}

/// Grouping bound on the given column pairs of the minimizer at `lambda`.
pub fn check_grouping_bound(
    problem: &Problem<'_>,
    lambda: f64,
    pairs: &[(usize, usize)],
    cfg: &OptimizerConfig,
) -> Result<GroupingCheckReport> {
    if !(lambda > 0.0) {
        return Err(PedError::InvalidConfig("the grouping bound needs lambda > 0".into()));
    }
    let report = minimize(problem, lambda, problem.correlations().view(), cfg)?;
    let beta = &report.beta_opt;
    let norm = l2_norm(beta.view());
    if norm == 0.0 {
        return Err(PedError::ZeroCoefficients("grouping distance"));
    }
    let pairs = pairs
        .iter()
        .map(|&(i, j)| {
            let rho = problem.x.column(i).dot(&problem.x.column(j)).clamp(-1.0, 1.0);
            let d_lambda = (beta[i] - beta[j]).abs() / norm;
            let bound = 2.0 / lambda * (2.0 * (1.0 - rho)).sqrt();
            let stated_bound = 2.0 * (1.0 - rho).sqrt() / lambda;
            GroupingPair {
                i,
                j,
                rho,
                d_lambda,
                bound,
                stated_bound,
                pass: d_lambda <= bound + GROUPING_REPORT_SLACK,
                stated_pass: d_lambda <= stated_bound + GROUPING_REPORT_SLACK,
            }
        })
        .collect();
    Ok(GroupingCheckReport { lambda, pairs })
}

/// Optimality conditions evaluated at a candidate minimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct StationarityReport {
    pub nonzero: usize,
    pub zero: usize,
    /// Largest `|βⱼ/‖β‖ − k̂(2cosⱼ/λ − k̂·sgn βⱼ)|` over nonzero coordinates.
    pub max_identity_residual: f64,
    /// Zero coordinates with `|cosⱼ| > λk̂/2 + slack`.
    pub zero_violations: usize,
    /// Largest `|cosⱼ| − λk̂/2` over zero coordinates.
    pub max_zero_excess: f64,
    /// Nonzero coordinates whose sign differs from the sign of `cosⱼ`.
    pub sign_mismatches: usize,
}

impl StationarityReport {
    pub fn zero_violation_fraction(&self) -> f64 {
        if self.zero == 0 {
            0.0
        } else {
            self.zero_violations as f64 / self.zero as f64
        }
    }
}

/// Evaluate the coordinatewise optimality conditions of `beta` at `lambda`.
pub fn stationarity(problem: &Problem<'_>, beta: ArrayView1<'_, f64>, lambda: f64, zero_slack: f64) -> Result<StationarityReport> {
    if !(lambda > 0.0) {
        return Err(PedError::InvalidConfig("optimality conditions need lambda > 0".into()));
    }
    let parts = ped_objective(problem, beta, lambda)?;
    let cos = parts.cosines.ok_or_else(|| PedError::Degenerate("residual vanishes".into()))?;
    let k = k_hat(beta)?;
    let norm = l2_norm(beta);
    let mut out = StationarityReport {
        nonzero: 0,
        zero: 0,
        max_identity_residual: 0.0,
        zero_violations: 0,
        max_zero_excess: f64::NEG_INFINITY,
        sign_mismatches: 0,
    };
    let kink = 0.5 * lambda * k;
    for (&b, &c) in beta.iter().zip(cos.iter()) {
        if b != 0.0 {
            out.nonzero += 1;
            let predicted = k * (2.0 * c / lambda - k * b.signum());
            out.max_identity_residual = out.max_identity_residual.max((b / norm - predicted).abs());
            if b.signum() != c.signum() {
                out.sign_mismatches += 1;
            }
        } else {
            out.zero += 1;
            let excess = c.abs() - kink;
            out.max_zero_excess = out.max_zero_excess.max(excess);
            if excess > zero_slack {
                out.zero_violations += 1;
            }
        }
    }
    Ok(out)
}

/// Residual norm of the least-squares fit, via Cholesky of `XᵀX`.
pub fn ols_residual_norm(problem: &Problem<'_>) -> Result<f64> {
    let (n, p) = (problem.n(), problem.p());
    let x = DMatrix::from_fn(n, p, |i, j| problem.x[[i, j]]);
    let y = DVector::from_iterator(n, problem.y.iter().copied());
    let chol = (x.transpose() * &x)
        .cholesky()
        .ok_or_else(|| PedError::Degenerate("design is not full column rank".into()))?;
    let beta = chol.solve(&(x.transpose() * &y));
    Ok((y - x * beta).norm())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaConvergenceReport {
    pub lambdas: Vec<f64>,
    pub residual_norms: Vec<f64>,
    pub ols_residual_norm: f64,
    /// `(‖r(λ_last)‖ − ‖r_OLS‖) / ‖r_OLS‖`.
    pub final_gap: f64,
    pub monotone: bool,
}

/// Residual norms along a decreasing `λ` sequence, compared with least squares.
pub fn check_lambda_convergence(
    problem: &Problem<'_>,
    lambdas: &[f64],
    cfg: &OptimizerConfig,
) -> Result<LambdaConvergenceReport> {
    if lambdas.is_empty() || lambdas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(PedError::InvalidConfig("lambda sequence must be non-empty and strictly decreasing".into()));
    }
    let ols = ols_residual_norm(problem)?;
    let init = problem.correlations();
    let residual_norms = lambdas
        .iter()
        .map(|&l| {
            let rep = minimize(problem, l, init.view(), cfg)?;
            let r = &problem.y - &problem.x.dot(&rep.beta_opt);
            Ok(l2_norm(r.view()))
        })
        .collect::<Result<Vec<f64>>>()?;
    let monotone = residual_norms.windows(2).all(|w| w[1] <= w[0] + 1e-9);
    let last = *residual_norms.last().expect("non-empty");
    Ok(LambdaConvergenceReport {
        lambdas: lambdas.to_vec(),
        residual_norms,
        ols_residual_norm: ols,
        final_gap: (last - ols) / ols,
        monotone,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRateReport {
    pub ns: Vec<usize>,
    /// Median of `‖β̂ − β*‖` over replicates, per `n`.
    pub medians: Vec<f64>,
    /// Last median over first median.
    pub ratio: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Median coefficient error of the full procedure as `n` grows with `p = 2n`.
pub fn check_oracle_rate(ns: &[usize], rho: f64, replicates: usize, seed: u64, cfg: &PedConfig) -> Result<OracleRateReport> {
    if ns.len() < 2 || replicates == 0 {
        return Err(PedError::InvalidConfig("need at least two sample sizes and one replicate".into()));
    }
    let medians = ns
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let spec = SimulationSpec::example_one(n, 2 * n, rho, replicates, seed.wrapping_add(k as u64))?;
            let report = run_study(&spec, cfg)?;
            Ok(median(report.per_replicate.iter().map(|o| o.squared_error.sqrt()).collect()))
        })
        .collect::<Result<Vec<f64>>>()?;
    let ratio = medians[medians.len() - 1] / medians[0];
    Ok(OracleRateReport { ns: ns.to_vec(), medians, ratio })
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Multiplies every slack; below 1 is stricter.
    pub tol_scale: f64,
    /// Run a single group from [`CHECK_GROUPS`].
    pub only: Option<String>,
    pub rate_replicates: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { seed: 20_240_601, tol_scale: 1.0, only: None, rate_replicates: 20 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub group: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct SuiteReport {
    pub outcomes: Vec<CheckOutcome>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.outcomes.iter().filter(|o| !o.passed)
    }

    pub fn to_table(&self) -> String {
        let width = self.outcomes.iter().map(|o| o.name.len()).max().unwrap_or(0);
        let mut out = String::new();
        for o in &self.outcomes {
            let status = if o.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("{status}  {:<12} {:<width$}  {}\n", o.group, o.name, o.detail));
        }
        out
    }
}

const GRID: [f64; 3] = [0.2, 0.5, 1.0];

fn norm_check(v: &VerifyConfig) -> CheckOutcome {
    let tol = 1e-12 * v.tol_scale;
    let mut rng = stream_rng(v.seed, 1);
    let (mut homog, mut tri, mut sandwich) = (0usize, 0usize, 0usize);
    let trials = 10_000;
    for _ in 0..trials {
        let p = rng.random_range(1..=50);
        let a = normal_vec(p, &mut rng);
        let b = normal_vec(p, &mut rng) * rng.random_range(0.01..100.0);
        let s: f64 = rng.random_range(-10.0..10.0);
        let na = geometric_mean_norm(a.view());
        if (geometric_mean_norm((&a * s).view()) - s.abs() * na).abs() > tol * s.abs() * na {
            homog += 1;
        }
        let nb = geometric_mean_norm(b.view());
        if geometric_mean_norm((&a + &b).view()) > (na + nb) * (1.0 + tol) {
            tri += 1;
        }
        let (l2, l1) = (l2_norm(a.view()), l1_norm(a.view()));
        if na < l2 * (1.0 - tol) || na > l1 * (1.0 + tol) {
            sandwich += 1;
        }
    }
    CheckOutcome {
        group: "norm",
        name: "norm_axioms",
        passed: homog + tri + sandwich == 0,
        detail: format!("{trials} vectors: homogeneity {homog}, triangle {tri}, sandwich {sandwich} failures"),
    }
}

fn gradient_check(v: &VerifyConfig) -> Result<CheckOutcome> {
    let tol = 1e-5 * v.tol_scale;
    let mut rng = stream_rng(v.seed, 2);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let points = 1000;
    for k in 0..points {
        let (n, p) = (rng.random_range(5..30), rng.random_range(1..12));
        let ds = random_instance(n, p, 0.3, p.min(3), 1.0, &mut rng)?;
        let prob = ds.problem();
        // Keep every coordinate away from zero so the point is smooth.
        let beta: Array1<f64> = (0..p)
            .map(|_| {
                let m: f64 = rng.random_range(0.1..2.0);
                if rng.random::<bool>() { m } else { -m }
            })
            .collect();
        let lambda = GRID[k % GRID.len()];
        let obj = SmoothedObjective::new(prob, lambda, 0.0);
        let g = ped_gradient(&prob, beta.view(), lambda, 0.0)?;
        let mut err: f64 = 0.0;
        for j in 0..p {
            let (mut up, mut down) = (beta.clone(), beta.clone());
            up[j] += h;
            down[j] -= h;
            let fd = (obj.value(up.view())? - obj.value(down.view())?) / (2.0 * h);
            err = err.max((g[j] - fd).abs() / g[j].abs().max(fd.abs()).max(1.0));
        }
        worst = worst.max(err);
    }
    Ok(CheckOutcome {
        group: "gradient",
        name: "finite_differences",
        passed: worst <= tol,
        detail: format!("{points} points, worst relative error {worst:.2e} (limit {tol:.0e})"),
    })
}

fn oracle_check(v: &VerifyConfig) -> Result<CheckOutcome> {
    let slack = 1e-6 * v.tol_scale;
    let cfg = OptimizerConfig::tight();
    let instances = 50;
    let gaps = (0..instances)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(v.seed, 100 + k as u64);
            let p = 1 + k % 2;
            let ds = random_instance(6 + k % 5, p, 0.4, p, 0.8, &mut rng)?;
            let prob = ds.problem();
            let lambda = 0.5;
            let rep = minimize(&prob, lambda, prob.correlations().view(), &cfg)?;
            let (_, oracle) = brute_force_minimize(&prob, lambda, 3.0, if p == 1 { 6001 } else { 401 })?;
            Ok(rep.final_objective() - oracle)
        })
        .collect::<Result<Vec<f64>>>()?;
    let worst = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(CheckOutcome {
        group: "oracle",
        name: "brute_force",
        passed: worst <= slack,
        detail: format!("{instances} instances with p in {{1, 2}}, worst solver minus grid {worst:.2e}"),
    })
}

fn identical_check(v: &VerifyConfig) -> Result<CheckOutcome> {
    let tol = 1e-6 * v.tol_scale;
    let cfg = OptimizerConfig::tight();
    let instances = 20;
    let reports = (0..instances)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(v.seed, 200 + k as u64);
            let pair = (1, 4);
            let ds = identical_columns_instance(30, 8, pair, k % 4 != 3, &mut rng)?;
            check_identical_columns(&ds.problem(), pair, GRID[k % GRID.len()], &cfg, tol)
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = reports.iter().map(|r| r.scaled_difference).fold(0.0, f64::max);
    Ok(CheckOutcome {
        group: "identical",
        name: "identical_columns",
        passed: reports.iter().all(|r| r.passed),
        detail: format!("{instances} instances over the default grid, worst scaled difference {worst:.2e}"),
    })
}

fn grouping_check(v: &VerifyConfig) -> Result<CheckOutcome> {
    let slack = 1e-6 * v.tol_scale;
    let cfg = OptimizerConfig::tight();
    let instances = 50;
    let reports = (0..instances)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(v.seed, 300 + k as u64);
            let rho = rng.random_range(0.9..0.999);
            let ds = correlated_pair_instance(40, 10, rho, &mut rng)?;
            check_grouping_bound(&ds.problem(), GRID[k % GRID.len()], &[(0, 1)], &cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let passed = reports.iter().filter(|r| r.holds_within(slack)).count();
    let stated = reports.iter().filter(|r| r.pairs.iter().all(|p| p.stated_pass)).count();
    let worst = reports
        .iter()
        .flat_map(|r| r.pairs.iter().map(|p| p.d_lambda / p.bound))
        .fold(0.0, f64::max);
    Ok(CheckOutcome {
        group: "grouping",
        name: "grouping_bound",
        passed: passed == instances,
        detail: format!(
            "{passed}/{instances} within (2/λ)√(2(1−ρ)); {stated}/{instances} within 2√(1−ρ)/λ; max D/bound {worst:.3}"
        ),
    })
}

fn stationarity_reports(v: &VerifyConfig) -> Result<Vec<(StationarityReport, f64)>> {
    let cfg = OptimizerConfig::tight();
    (0..20)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(v.seed, 400 + k as u64);
            let ds = random_instance(50, 80, 0.5, 5, 1.0, &mut rng)?;
            let prob = ds.problem();
            // Zero is optimal once λ reaches the dual norm of the initial cosines.
            let cos0 = prob.correlations() / l2_norm(prob.y);
            let lambda = [0.4, 0.6, 0.8][k % 3] * dual_norm(cos0.view()).0;
            let rep = minimize(&prob, lambda, prob.correlations().view(), &cfg)?;
            Ok((stationarity(&prob, rep.beta_opt.view(), lambda, 2e-2 * v.tol_scale)?, rep.final_grad_norm))
        })
        .collect()
}

fn kkt_checks(v: &VerifyConfig, want_kkt: bool, want_sign: bool) -> Result<Vec<CheckOutcome>> {
    let reports = stationarity_reports(v)?;
    let worst_grad = reports.iter().map(|(_, g)| *g).fold(0.0, f64::max);
    let mut out = Vec::new();
    if want_kkt {
        let identity = reports.iter().map(|(r, _)| r.max_identity_residual).fold(0.0, f64::max);
        let zeros: usize = reports.iter().map(|(r, _)| r.zero).sum();
        let violations: usize = reports.iter().map(|(r, _)| r.zero_violations).sum();
        let fraction = if zeros == 0 { 0.0 } else { violations as f64 / zeros as f64 };
        out.push(CheckOutcome {
            group: "kkt",
            name: "nonzero_identity",
            passed: identity <= 1e-3 * v.tol_scale,
            detail: format!("20 fits (pseudo-gradient ≤ {worst_grad:.1e}), worst residual {identity:.2e}"),
        });
        out.push(CheckOutcome {
            group: "kkt",
            name: "zero_cosine_condition",
            passed: fraction <= 0.05,
            detail: format!("{violations}/{zeros} zero coordinates exceed λk̂/2 + slack ({:.2}%)", 100.0 * fraction),
        });
    }
    if want_sign {
        let mismatches: usize = reports.iter().map(|(r, _)| r.sign_mismatches).sum();
        let nonzero: usize = reports.iter().map(|(r, _)| r.nonzero).sum();
        out.push(CheckOutcome {
            group: "sign",
            name: "sign_consistency",
            passed: mismatches == 0,
            detail: format!("{mismatches}/{nonzero} nonzero coefficients disagree in sign with their cosine"),
        });
    }
    Ok(out)
}

fn convergence_check(v: &VerifyConfig) -> Result<CheckOutcome> {
    let mut rng = stream_rng(v.seed, 500);
    let ds = random_instance(50, 5, 0.3, 3, 1.0, &mut rng)?;
    let lambdas = [1.0, 0.1, 0.01, 1e-3, 1e-4];
    let rep = check_lambda_convergence(&ds.problem(), &lambdas, &OptimizerConfig::tight())?;
    Ok(CheckOutcome {
        group: "convergence",
        name: "lambda_to_zero",
        passed: rep.monotone && rep.final_gap <= 0.01 * v.tol_scale,
        detail: format!("monotone {}, gap to least squares at λ = 1e-4: {:.2e}", rep.monotone, rep.final_gap),
    })
}

fn rate_check(v: &VerifyConfig) -> Result<CheckOutcome> {
    let rep = check_oracle_rate(&[100, 200, 400, 800], 0.5, v.rate_replicates, v.seed, &PedConfig::default())?;
    let medians: Vec<String> = rep.ns.iter().zip(&rep.medians).map(|(n, m)| format!("n={n}: {m:.3}")).collect();
    Ok(CheckOutcome {
        group: "rate",
        name: "oracle_rate",
        passed: rep.ratio <= 0.6,
        detail: format!("medians {}; ratio {:.3} (limit 0.6)", medians.join(", "), rep.ratio),
    })
}

/// Run every check, or only the group named in `cfg.only`.
pub fn run_suite(cfg: &VerifyConfig) -> Result<SuiteReport> {
    if !(cfg.tol_scale > 0.0 && cfg.tol_scale.is_finite()) {
        return Err(PedError::InvalidConfig(format!("tolerance scale must be positive, got {}", cfg.tol_scale)));
    }
    if let Some(g) = cfg.only.as_deref() {
        if !CHECK_GROUPS.contains(&g) {
            return Err(PedError::InvalidConfig(format!(
                "unknown check group '{g}'; expected one of {}",
                CHECK_GROUPS.join(", ")
            )));
        }
    }
    let want = |g: &str| cfg.only.as_deref().is_none_or(|o| o == g);
    let mut outcomes = Vec::new();
    if want("norm") {
        outcomes.push(norm_check(cfg));
    }
    if want("gradient") {
        outcomes.push(gradient_check(cfg)?);
    }
    if want("oracle") {
        outcomes.push(oracle_check(cfg)?);
    }
    if want("identical") {
        outcomes.push(identical_check(cfg)?);
    }
    if want("grouping") {
        outcomes.push(grouping_check(cfg)?);
    }
    if want("kkt") || want("sign") {
        outcomes.extend(kkt_checks(cfg, want("kkt"), want("sign"))?);
    }
    if want("convergence") {
        outcomes.push(convergence_check(cfg)?);
    }
    if want("rate") {
        outcomes.push(rate_check(cfg)?);
    }
    Ok(SuiteReport { outcomes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn brute_force_rejects_large_p() {
        let x = Array2::<f64>::eye(4);
        let y = array![1.0, 0.0, 0.0, 0.0];
        let prob = Problem::new(x.view(), y.view()).unwrap();
        assert!(brute_force_minimize(&prob, 0.5, 1.0, 11).is_err());
    }

    #[test]
    fn brute_force_huge_lambda_gives_zero() {
        let x = array![[1.0], [-1.0], [0.5]];
        let y = array![1.0, -0.8, 0.3];
        let prob = Problem::new(x.view(), y.view()).unwrap();
        let (beta, f) = brute_force_minimize(&prob, 1e3, 3.0, 601).unwrap();
        assert_eq!(beta[0], 0.0);
        assert!((f - l2_norm(y.view())).abs() < 1e-12);
    }

    #[test]
    fn brute_force_symmetric_under_swap() {
        // Swapping the two columns maps Y to itself, so the minimum value is swap-invariant
        // and the minimizing grid point can be swapped without changing the value.
        let x = array![[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]];
        let y = array![1.0, 1.0, 0.2];
        let prob = Problem::new(x.view(), y.view()).unwrap();
        let (beta, f) = brute_force_minimize(&prob, 0.3, 2.0, 201).unwrap();
        let swapped = array![beta[1], beta[0]];
        let r = &y - &x.dot(&swapped);
        let g = l2_norm(r.view()) + 0.3 * geometric_mean_norm(swapped.view());
        assert!((f - g).abs() < 1e-12);
    }

    #[test]
    fn correlated_pair_has_requested_correlation() {
        let mut rng = stream_rng(3, 0);
        let ds = correlated_pair_instance(30, 5, 0.95, &mut rng).unwrap();
        let rho = ds.x().column(0).dot(&ds.x().column(1));
        assert!((rho - 0.95).abs() < 1e-12);
    }

    #[test]
    fn ols_residual_matches_projection() {
        // Y orthogonal to the single centered column: the fit is zero and the residual is Y.
        let x = array![[1.0], [-1.0], [0.0]] / 2f64.sqrt();
        let y = array![1.0, 1.0, -2.0];
        let prob = Problem::new(x.view(), y.view()).unwrap();
        assert!((ols_residual_norm(&prob).unwrap() - 6f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn unknown_group_is_rejected() {
        let cfg = VerifyConfig { only: Some("nope".into()), ..VerifyConfig::default() };
        assert!(run_suite(&cfg).is_err());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
