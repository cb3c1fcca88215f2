// Compare the orthant-wise and smoothed optimizers on one problem.

use ped::optimizer::{minimize, OptimizerConfig, Strategy};
use ped::verification::random_instance;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let ds = random_instance(60, 30, 0.5, 4, 0.5, &mut rng)?;
    let problem = ds.problem();
    let lambda = 0.5;

    for strategy in [Strategy::OrthantWise, Strategy::Smoothed] {
        let cfg = OptimizerConfig { strategy, memory: 7, max_iters: 5000, ..OptimizerConfig::default() };
        let rep = minimize(&problem, lambda, problem.correlations().view(), &cfg)?;
        let exact_zeros = rep.beta_opt.iter().filter(|b| **b == 0.0).count();
        let tiny = rep.beta_opt.iter().filter(|b| b.abs() < 1e-6).count();
        println!(
            "{strategy:?}: objective {:.10}, {} iterations, {:?}, |g| {:.1e}, exact zeros {exact_zeros}, |b| < 1e-6 {tiny}",
            rep.final_objective(),
            rep.iterations,
            rep.termination,
            rep.final_grad_norm,
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
