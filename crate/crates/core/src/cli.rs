//! Command-line front end: `fit`, `simulate` and `verify`.
//!
//! Every run prints its effective configuration as TOML before computing.
//! Exit codes: 0 success, 1 failed verification checks, 2 input or usage
//! error, 3 numerical degeneracy.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::algorithm::{ped_fit, PedConfig, ScreeningRound, Selection};
use crate::data::{load_csv, ResponseColumn};
use crate::error::{PedError, Result};
use crate::optimizer::{Strategy, Termination};
use crate::simulation::{run_study, SimulationSpec};
use crate::verification::{run_suite, VerifyConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECKS_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ped", version, about = "Penalized Euclidean distance regression")]
pub struct Cli {
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Log progress at info level.
    #[arg(short, long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a CSV data set.
    Fit(FitArgs),
    /// Run the AR(1) simulation study.
    Simulate(SimulateArgs),
    /// Run the numerical verification suite.
    Verify(VerifyArgs),
}

/// Flags mirroring [`PedConfig`].
#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Comma-separated λ₀ values.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub lambda_grid: Option<Vec<f64>>,

    /// Comma-separated screening constants C.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub c_grid: Option<Vec<f64>>,

    /// Confidence level of the theoretical λ.
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Multiplier of the theoretical λ.
    #[arg(long)]
    pub c: Option<f64>,

    /// Extra screening rounds.
    #[arg(long)]
    pub rounds: Option<usize>,

    /// khat, khat-refit or aic.
    #[arg(long)]
    pub selection: Option<Selection>,

    /// orthant-wise or smoothed.
    #[arg(long)]
    pub strategy: Option<Strategy>,

    #[arg(long)]
    pub max_iters: Option<usize>,

    #[arg(long)]
    pub grad_tol: Option<f64>,
}

impl GridArgs {
    pub fn to_config(&self, seed: u64) -> PedConfig {
        let mut cfg = PedConfig { seed, ..PedConfig::default() };
        if let Some(g) = &self.lambda_grid {
            cfg.lambda_grid = g.clone();
        }
        if let Some(g) = &self.c_grid {
            cfg.c_grid = g.clone();
        }
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        if let Some(c) = self.c {
            cfg.c = c;
        }
        if let Some(r) = self.rounds {
            cfg.iterative_rounds = r;
        }
        if let Some(s) = self.selection {
            cfg.selection = s;
        }
        if let Some(s) = self.strategy {
            cfg.optimizer.strategy = s;
        }
        if let Some(m) = self.max_iters {
            cfg.optimizer.max_iters = m;
        }
        if let Some(t) = self.grad_tol {
            cfg.optimizer.grad_tol = t;
        }
        cfg
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV with a header row.
    #[arg(long, short)]
    pub input: PathBuf,

    /// Response column, by header name or zero-based index.
    #[arg(long, short)]
    pub response: ResponseColumn,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Write the coefficient CSV here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,

    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: usize,

    #[arg(long)]
    pub p: usize,

    #[arg(long)]
    pub rho: f64,

    #[arg(long, default_value_t = 1.5)]
    pub sigma: f64,

    #[arg(long, default_value_t = 30)]
    pub replicates: usize,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Write the per-replicate CSV here instead of stdout.
    #[arg(long)]
    pub csv: Option<PathBuf>,

    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Run one group: norm, gradient, oracle, identical, grouping, kkt, sign,
    /// convergence or rate.
    #[arg(long)]
    pub only: Option<String>,

    /// Multiplier on every slack; 0.01 is 100× tighter.
    #[arg(long, default_value_t = 1.0)]
    pub tol: f64,

    #[arg(long, default_value_t = VerifyConfig::default().seed)]
    pub seed: u64,

    #[arg(long, default_value_t = VerifyConfig::default().rate_replicates)]
    pub rate_replicates: usize,
}

/// Parse `args` (including the program name) and run. Usage errors exit 2,
/// `--help` and `--version` exit 0.
pub fn run_from_args<I, T>(args: I, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli, out, err),
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            code
        }
    }
}

/// Run a parsed invocation and return the process exit code.
pub fn run(cli: &Cli, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32 {
    let result = with_threads(cli.threads, || match &cli.command {
        Command::Fit(a) => run_fit(a, out),
        Command::Simulate(a) => run_simulate(a, out),
        Command::Verify(a) => run_verify(a, out, err),
    });
    match result.and_then(|r| r) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(PedError::InvalidConfig("--threads must be at least 1".into())),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| PedError::InvalidConfig(format!("thread pool: {e}"))),
    }
}

fn to_toml<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string(value).map_err(|e| PedError::InvalidConfig(format!("serializing: {e}")))
}

fn print_config<T: Serialize>(out: &mut (dyn Write + Send), value: &T) -> Result<()> {
    writeln!(out, "# effective configuration")?;
    writeln!(out, "{}", to_toml(value)?.trim_end())?;
    writeln!(out)?;
    Ok(())
}

#[derive(Serialize)]
struct FitInvocation<'a> {
    command: &'static str,
    input: String,
    response: String,
    threads: usize,
    output: Option<String>,
    ped: &'a PedConfig,
}

#[derive(Serialize)]
struct SimulateInvocation<'a> {
    command: &'static str,
    n: usize,
    p: usize,
    rho: f64,
    sigma: f64,
    replicates: usize,
    seed: u64,
    threads: usize,
    csv: Option<String>,
    ped: &'a PedConfig,
}

#[derive(Serialize)]
struct VerifyInvocation<'a> {
    command: &'static str,
    seed: u64,
    tol_scale: f64,
    only: &'a str,
    rate_replicates: usize,
    threads: usize,
}

#[derive(Serialize)]
struct OptimizerSummary {
    iterations: usize,
    final_grad_norm: f64,
    converged: bool,
    termination: Termination,
}

/// Machine-readable summary of a fit; coefficients go to a separate CSV.
#[derive(Serialize)]
pub struct FitSummary {
    pub lambda0: f64,
    pub c_threshold: f64,
    pub lambda_f: f64,
    pub k_hat: f64,
    pub selection: Selection,
    pub selection_score: f64,
    pub residual_norm: f64,
    pub intercept: f64,
    pub model_size: usize,
    pub active_set_size: usize,
    pub degenerate_screen: bool,
    pub dropped_columns: Vec<String>,
    pub screening: Vec<ScreeningRound>,
    optimizer: Vec<OptimizerSummary>,
}

fn run_fit(a: &FitArgs, out: &mut (dyn Write + Send)) -> Result<i32> {
    let cfg = a.grid.to_config(a.seed);
    print_config(
        out,
        &FitInvocation {
            command: "fit",
            input: a.input.display().to_string(),
            response: a.response.to_string(),
            threads: rayon::current_num_threads(),
            output: a.output.as_ref().map(|p| p.display().to_string()),
            ped: &cfg,
        },
    )?;
    cfg.validate()?;
    let raw = load_csv(&a.input, &a.response)?;
    let ds = raw.standardize()?;
    log::info!("fitting n = {}, p = {} ({} usable columns)", raw.n(), raw.p(), ds.p());
    let fit = ped_fit(&ds, &cfg)?;
    let (beta_raw, intercept) = ds.destandardize(fit.beta.view())?;

    let summary = FitSummary {
        lambda0: fit.lambda0,
        c_threshold: fit.c_threshold,
        lambda_f: fit.lambda_final,
        k_hat: fit.k_hat_final,
        selection: cfg.selection,
        selection_score: fit.selection_score,
        residual_norm: fit.residual_norm,
        intercept,
        model_size: fit.model_size(),
        active_set_size: fit.active_set.len(),
        degenerate_screen: fit.degenerate_screen,
        dropped_columns: ds.dropped_columns().iter().map(|&j| raw.column_name(j)).collect(),
        screening: fit.screening_history.clone(),
        optimizer: fit
            .optimizer_reports
            .iter()
            .map(|r| OptimizerSummary {
                iterations: r.iterations,
                final_grad_norm: r.final_grad_norm,
                converged: r.converged,
                termination: r.termination,
            })
            .collect(),
    };
    writeln!(out, "# fit")?;
    writeln!(out, "{}", to_toml(&summary)?.trim_end())?;

    let mut csv = String::from("index,name,coefficient\n");
    for &j in &fit.active_set {
        let raw_j = ds.retained_columns()[j];
        let _ = writeln!(csv, "{},{},{:.12e}", raw_j, raw.column_name(raw_j), beta_raw[raw_j]);
    }
    emit_csv(out, a.output.as_ref(), "active-set coefficients (raw scale)", &csv)?;
    Ok(EXIT_OK)
}

fn emit_csv(out: &mut (dyn Write + Send), path: Option<&PathBuf>, what: &str, csv: &str) -> Result<()> {
    match path {
        Some(path) => {
            std::fs::write(path, csv)?;
            writeln!(out, "\n# {what} written to {}", path.display())?;
        }
        None => {
            writeln!(out, "\n# {what}")?;
            out.write_all(csv.as_bytes())?;
        }
    }
    Ok(())
}

fn run_simulate(a: &SimulateArgs, out: &mut (dyn Write + Send)) -> Result<i32> {
    let cfg = a.grid.to_config(a.seed);
    print_config(
        out,
        &SimulateInvocation {
            command: "simulate",
            n: a.n,
            p: a.p,
            rho: a.rho,
            sigma: a.sigma,
            replicates: a.replicates,
            seed: a.seed,
            threads: rayon::current_num_threads(),
            csv: a.csv.as_ref().map(|p| p.display().to_string()),
            ped: &cfg,
        },
    )?;
    let mut spec = SimulationSpec::example_one(a.n, a.p, a.rho, a.replicates, a.seed)?;
    spec.sigma = a.sigma;
    spec.validate()?;
    cfg.validate()?;
    log::info!("running {} replicates", spec.replicates);
    let report = run_study(&spec, &cfg)?;
    out.write_all(report.to_table(&spec).as_bytes())?;
    emit_csv(out, a.csv.as_ref(), "per-replicate metrics", &report.to_csv())?;
    Ok(EXIT_OK)
}

fn run_verify(a: &VerifyArgs, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Result<i32> {
    let cfg = VerifyConfig {
        seed: a.seed,
        tol_scale: a.tol,
        only: a.only.clone(),
        rate_replicates: a.rate_replicates,
    };
    print_config(
        out,
        &VerifyInvocation {
            command: "verify",
            seed: cfg.seed,
            tol_scale: cfg.tol_scale,
            only: cfg.only.as_deref().unwrap_or("all"),
            rate_replicates: cfg.rate_replicates,
            threads: rayon::current_num_threads(),
        },
    )?;
    let report = run_suite(&cfg)?;
    out.write_all(report.to_table().as_bytes())?;
    if report.all_passed() {
        return Ok(EXIT_OK);
    }
    let names: Vec<String> = report.failures().map(|o| format!("{}/{}", o.group, o.name)).collect();
    writeln!(err, "failed checks: {}", names.join(", "))?;
    Ok(EXIT_CHECKS_FAILED)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(args).unwrap()
    }

    #[test]
    fn grid_flags_override_defaults() {
        let cli = parse(&["ped", "fit", "-i", "x.csv", "-r", "y", "--lambda-grid", "0.5", "--c-grid", "0.75,1"]);
        let Command::Fit(a) = cli.command else { panic!("expected fit") };
        let cfg = a.grid.to_config(a.seed);
        assert_eq!(cfg.lambda_grid, vec![0.5]);
        assert_eq!(cfg.c_grid, vec![0.75, 1.0]);
        assert_eq!(cfg.selection, Selection::MaximizeKHat);
        assert_eq!(a.response, ResponseColumn::Name("y".into()));
    }

    #[test]
    fn response_index_and_selection_parse() {
        let cli = parse(&["ped", "fit", "-i", "x.csv", "-r", "0", "--selection", "aic"]);
        let Command::Fit(a) = cli.command else { panic!("expected fit") };
        assert_eq!(a.response, ResponseColumn::Index(0));
        assert_eq!(a.grid.selection, Some(Selection::Aic));
    }

    #[test]
    fn missing_required_flags_exit_two() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run_from_args(["ped", "simulate", "--n", "10"], &mut out, &mut err), EXIT_INPUT);
        assert_eq!(run_from_args(["ped", "fit", "--input", "a.csv"], &mut out, &mut err), EXIT_INPUT);
    }

    #[test]
    fn help_exits_zero() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run_from_args(["ped", "--help"], &mut out, &mut err), EXIT_OK);
        assert!(String::from_utf8(out).unwrap().contains("simulate"));
    }

    #[test]
    fn zero_threads_is_input_error() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_from_args(["ped", "--threads", "0", "verify", "--only", "norm"], &mut out, &mut err);
        assert_eq!(code, EXIT_INPUT);
    }
}
