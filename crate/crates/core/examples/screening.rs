// The two-step procedure by hand: fit at λ₀, screen with C, refit at λ_F.

use ndarray::Array1;
use ped::algorithm::{lambda_f, ped_fit, screen, theoretical_lambda, PedConfig};
use ped::optimizer::{minimize, OptimizerConfig};
use ped::simulation::{generate_replicate, SimulationSpec};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SimulationSpec::example_one(100, 200, 0.9, 1, 3)?;
    let ds = generate_replicate(&spec, 0)?.standardize()?;
    let problem = ds.problem();
    let (n, p) = (ds.n(), ds.p());
    let (lambda0, c) = (0.5, 0.75);
    let opt = OptimizerConfig::default();

    println!("theoretical lambda for n = {n}, p = {p}: {:.4}", theoretical_lambda(n, p, 0.05, 1.1));
    let step1 = minimize(&problem, lambda0, problem.correlations().view(), &opt)?;
    let nonzero = step1.beta_opt.iter().filter(|b| **b != 0.0).count();
    println!("step 1 at lambda0 = {lambda0}: {nonzero} nonzero, {} iterations", step1.iterations);

    let s = screen(step1.beta_opt.view(), c, n)?;
    println!("screen |b_j|/|b| >= {c}/sqrt(n) keeps {} columns: {:?}", s.retained.len(), s.retained);

    let sub = ds.x().select(ndarray::Axis(1), &s.retained);
    let sub_problem = ped::data::Problem::new(sub.view(), ds.y())?;
    let lf = lambda_f(n, s.retained.len(), 0.05, 1.1);
    let refit = minimize(&sub_problem, lf, sub_problem.correlations().view(), &opt)?;
    let mut beta = Array1::zeros(p);
    for (k, &j) in s.retained.iter().enumerate() {
        beta[j] = refit.beta_opt[k];
    }

    let fit = ped_fit(&ds, &PedConfig::default().with_fixed_grid(lambda0, c))?;
    let gap = (&beta - &fit.beta).iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    println!("refit at lambda_F = {lf:.4}; max difference from ped_fit: {gap:.2e}");
    let support = spec.support();
    let tp = support.iter().filter(|&&j| fit.beta[j] != 0.0).count();
    println!("true positives {tp} of {}, model size {}", support.len(), fit.model_size());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
