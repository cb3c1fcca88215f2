//! Synthetic AR(1)-correlated designs and replicated fitting studies.
//!
//! Rows are drawn from `N(0, Σ)` with `Σⱼₖ = ρ^{|j−k|}` through the recursion
//! `x₁ = z₁`, `xⱼ = ρ·xⱼ₋₁ + √(1−ρ²)·zⱼ`, and responses follow
//! `Y = Xβ* + σε`. Replicate `r` draws from the ChaCha stream `r` of the
//! master seed, so results do not depend on scheduling.

use std::fmt::Write as _;

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::algorithm::{ped_fit, PedConfig};
use crate::data::RawDataset;
use crate::error::{PedError, Result};

/// Twelve coefficients of 0.3 in three blocks of four, separated by fifty zeros.
pub fn default_beta_star(p: usize) -> Result<Array1<f64>> {
    if p < 112 {
        return Err(PedError::InvalidConfig(format!("the default signal needs p >= 112, got {p}")));
    }
    let mut beta = Array1::zeros(p);
    for start in [0, 54, 108] {
        for j in start..start + 4 {
            beta[j] = 0.3;
        }
    }
    Ok(beta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSpec {
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    pub sigma: f64,
    pub beta_star: Array1<f64>,
    pub replicates: usize,
    pub seed: u64,
}

impl SimulationSpec {
    /// Spec with the default signal and `σ = 1.5`.
    pub fn example_one(n: usize, p: usize, rho: f64, replicates: usize, seed: u64) -> Result<Self> {
        let spec = Self { n, p, rho, sigma: 1.5, beta_star: default_beta_star(p)?, replicates, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PedError::InvalidConfig(m));
        if self.n < 2 || self.p < 1 {
            return bad(format!("need n >= 2 and p >= 1, got n = {}, p = {}", self.n, self.p));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return bad(format!("rho must lie in [0, 1), got {}", self.rho));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be non-negative, got {}", self.sigma));
        }
        if self.beta_star.len() != self.p {
            return bad(format!("beta_star has length {}, expected {}", self.beta_star.len(), self.p));
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        Ok(())
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.p).filter(|&j| self.beta_star[j] != 0.0).collect()
    }

    /// Generator for replicate `r`.
    pub fn replicate_rng(&self, replicate: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(replicate as u64);
        rng
    }
}

/// `n × p` design with AR(1) correlation `rho`.
pub fn generate_design<R: rand::Rng + ?Sized>(n: usize, p: usize, rho: f64, rng: &mut R) -> Array2<f64> {
    let innov = (1.0 - rho * rho).sqrt();
    let mut x = Array2::zeros((n, p));
    for mut row in x.rows_mut() {
        let mut prev: f64 = StandardNormal.sample(rng);
        row[0] = prev;
        for j in 1..p {
            let z: f64 = StandardNormal.sample(rng);
            prev = rho * prev + innov * z;
            row[j] = prev;
        }
    }
    x
}

/// `Y = Xβ* + σε`.
pub fn generate_response<R: rand::Rng + ?Sized>(
    x: &Array2<f64>,
    beta_star: &Array1<f64>,
    sigma: f64,
    rng: &mut R,
) -> Array1<f64> {
    let mut y = x.dot(beta_star);
    for v in y.iter_mut() {
        let e: f64 = StandardNormal.sample(rng);
        *v += sigma * e;
    }
    y
}

/// Draw replicate `r` of a study.
pub fn generate_replicate(spec: &SimulationSpec, replicate: usize) -> Result<RawDataset> {
    let mut rng = spec.replicate_rng(replicate);
    let x = generate_design(spec.n, spec.p, spec.rho, &mut rng);
    let y = generate_response(&x, &spec.beta_star, spec.sigma, &mut rng);
    RawDataset::new(x, y, None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub true_positives: usize,
    pub model_size: usize,
    /// `‖β̂ − β*‖²` on the raw scale.
    pub squared_error: f64,
    pub lambda0: f64,
    pub c_threshold: f64,
    pub lambda_final: f64,
    pub k_hat: f64,
    /// Raw-scale coefficients.
    pub beta_hat: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateFailure {
    pub replicate: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// Mean number of true nonzeros estimated as nonzero.
    pub tp: f64,
    /// Mean number of estimated nonzeros.
    pub ms: f64,
    /// `√(mean over replicates of ‖β̂ − β*‖²)`.
    pub rmse: f64,
    /// `√(mean over replicates of ‖β̂ − β*‖²/p)`.
    pub rmse_per_coordinate: f64,
    pub per_replicate: Vec<ReplicateOutcome>,
    pub failures: Vec<ReplicateFailure>,
}

/// Score a raw-scale estimate against the truth.
pub fn score_estimate(beta_hat: &Array1<f64>, beta_star: &Array1<f64>) -> (usize, usize, f64) {
    let tp = beta_hat.iter().zip(beta_star).filter(|(b, s)| **b != 0.0 && **s != 0.0).count();
    let ms = beta_hat.iter().filter(|b| **b != 0.0).count();
    let se = beta_hat.iter().zip(beta_star).map(|(b, s)| (b - s) * (b - s)).sum();
    (tp, ms, se)
}

/// Aggregate per-replicate outcomes; fails if more than 10% of replicates failed.
pub fn aggregate(
    p: usize,
    outcomes: Vec<ReplicateOutcome>,
    failures: Vec<ReplicateFailure>,
) -> Result<MetricsReport> {
    let total = outcomes.len() + failures.len();
    if outcomes.is_empty() || failures.len() * 10 > total {
        return Err(PedError::StudyFailed { failed: failures.len(), total });
    }
    let m = outcomes.len() as f64;
    let tp = outcomes.iter().map(|o| o.true_positives as f64).sum::<f64>() / m;
    let ms = outcomes.iter().map(|o| o.model_size as f64).sum::<f64>() / m;
    let mse = outcomes.iter().map(|o| o.squared_error).sum::<f64>() / m;
    Ok(MetricsReport {
        tp,
        ms,
        rmse: mse.sqrt(),
        rmse_per_coordinate: (mse / p as f64).sqrt(),
        per_replicate: outcomes,
        failures,
    })
}

pub fn run_replicate(spec: &SimulationSpec, cfg: &PedConfig, replicate: usize) -> Result<ReplicateOutcome> {
    let raw = generate_replicate(spec, replicate)?;
    let ds = raw.standardize()?;
    let fit = ped_fit(&ds, cfg)?;
    let (beta_hat, _) = ds.destandardize(fit.beta.view())?;
    let (tp, ms, se) = score_estimate(&beta_hat, &spec.beta_star);
    Ok(ReplicateOutcome {
        replicate,
        true_positives: tp,
        model_size: ms,
        squared_error: se,
        lambda0: fit.lambda0,
        c_threshold: fit.c_threshold,
        lambda_final: fit.lambda_final,
        k_hat: fit.k_hat_final,
        beta_hat,
    })
}

/// Fit every replicate and compute TP / MS / RMSE.
pub fn run_study(spec: &SimulationSpec, cfg: &PedConfig) -> Result<MetricsReport> {
    spec.validate()?;
    cfg.validate()?;
    let results: Vec<_> = (0..spec.replicates)
        .into_par_iter()
        .map(|r| run_replicate(spec, cfg, r))
        .collect();
    let mut outcomes = Vec::new();
    let mut failures = Vec::new();
    for (replicate, res) in results.into_iter().enumerate() {
        match res {
            Ok(o) => outcomes.push(o),
            Err(e) => {
                log::warn!("replicate {replicate} failed: {e}");
                failures.push(ReplicateFailure { replicate, message: e.to_string() });
            }
        }
    }
    aggregate(spec.p, outcomes, failures)
}

impl MetricsReport {
    /// Per-replicate rows as CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("replicate,status,tp,ms,squared_error,lambda0,c_threshold,lambda_final,k_hat\n");
        let mut rows: Vec<(usize, String)> = self
            .per_replicate
            .iter()
            .map(|o| {
                (
                    o.replicate,
                    format!(
                        "{},ok,{},{},{:.12e},{},{},{:.12e},{:.12e}\n",
                        o.replicate, o.true_positives, o.model_size, o.squared_error,
                        o.lambda0, o.c_threshold, o.lambda_final, o.k_hat
                    ),
                )
            })
            .chain(self.failures.iter().map(|f| {
                (f.replicate, format!("{},failed,,,,,,,\n", f.replicate))
            }))
            .collect();
        rows.sort_by_key(|(r, _)| *r);
        for (_, row) in rows {
            out.push_str(&row);
        }
        out
    }

    /// Aligned summary table.
    pub fn to_table(&self, spec: &SimulationSpec) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "n = {}, p = {}, rho = {}, sigma = {}, replicates = {} ({} failed), seed = {}",
            spec.n, spec.p, spec.rho, spec.sigma, spec.replicates, self.failures.len(), spec.seed
        );
        let _ = writeln!(out, "RMSE = sqrt(mean ||b - b*||^2); RMSE/coord = sqrt(mean ||b - b*||^2 / p)");
        let _ = writeln!(out, "{:<12}{:>12}", "metric", "value");
        let _ = writeln!(out, "{:<12}{:>12.4}", "TP", self.tp);
        let _ = writeln!(out, "{:<12}{:>12.4}", "MS", self.ms);
        let _ = writeln!(out, "{:<12}{:>12.4}", "RMSE", self.rmse);
        let _ = writeln!(out, "{:<12}{:>12.4}", "RMSE/coord", self.rmse_per_coordinate);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_signal_pattern() {
        let b = default_beta_star(200).unwrap();
        assert_eq!(b.iter().filter(|v| **v != 0.0).count(), 12);
        assert_eq!(b[3], 0.3);
        assert_eq!(b[4], 0.0);
        assert_eq!(b[54], 0.3);
        assert_eq!(b[111], 0.3);
        assert_eq!(b[112], 0.0);
        assert!(default_beta_star(111).is_err());
    }

    #[test]
    fn same_seed_same_bits() {
        let spec = SimulationSpec::example_one(20, 120, 0.9, 2, 7).unwrap();
        let a = generate_replicate(&spec, 1).unwrap();
        let b = generate_replicate(&spec, 1).unwrap();
        assert_eq!(a.x(), b.x());
        assert_eq!(a.y(), b.y());
        let c = generate_replicate(&spec, 0).unwrap();
        assert_ne!(a.x(), c.x());
    }

    #[test]
    fn scoring() {
        let star = Array1::from(vec![0.3, 0.0, 0.3, 0.0]);
        let hat = Array1::from(vec![0.2, 0.1, 0.0, 0.0]);
        let (tp, ms, se) = score_estimate(&hat, &star);
        assert_eq!((tp, ms), (1, 2));
        assert!((se - (0.01 + 0.01 + 0.09)).abs() < 1e-15);
    }

    #[test]
    fn too_many_failures_fail_the_study() {
        let ok = |r| ReplicateOutcome {
            replicate: r,
            true_positives: 1,
            model_size: 2,
            squared_error: 0.5,
            lambda0: 0.5,
            c_threshold: 1.0,
            lambda_final: 0.4,
            k_hat: 0.8,
            beta_hat: Array1::zeros(3),
        };
        let fail = |r| ReplicateFailure { replicate: r, message: "x".into() };
        let outcomes: Vec<_> = (0..9).map(ok).collect();
        assert!(aggregate(3, outcomes.clone(), vec![fail(9)]).is_ok());
        assert!(aggregate(3, outcomes[..8].to_vec(), vec![fail(8), fail(9)]).is_err());
        let rep = aggregate(3, outcomes, vec![]).unwrap();
        assert_eq!(rep.tp, 1.0);
        assert!((rep.rmse - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(SimulationSpec::example_one(100, 200, 1.0, 1, 0).is_err());
        assert!(SimulationSpec::example_one(100, 200, 0.5, 0, 0).is_err());
    }
}
