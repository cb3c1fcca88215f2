// Strongly correlated columns receive nearly equal coefficients; duplicated
// columns receive exactly equal ones.

use ped::optimizer::OptimizerConfig;
use ped::verification::{check_grouping_bound, check_identical_columns, correlated_pair_instance, identical_columns_instance};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let cfg = OptimizerConfig::tight();

    println!("{:>7} {:>7} {:>12} {:>12}", "rho", "lambda", "D(i,j)", "bound");
    for rho in [0.9, 0.99, 0.999] {
        let ds = correlated_pair_instance(40, 10, rho, &mut rng)?;
        for lambda in [0.2, 0.5, 1.0] {
            let rep = check_grouping_bound(&ds.problem(), lambda, &[(0, 1)], &cfg)?;
            let pair = &rep.pairs[0];
            println!("{:>7} {:>7} {:>12.3e} {:>12.3e}", pair.rho, lambda, pair.d_lambda, pair.bound);
        }
    }

    let ds = identical_columns_instance(30, 8, (1, 4), true, &mut rng)?;
    for lambda in [0.2, 0.5, 1.0] {
        let rep = check_identical_columns(&ds.problem(), (1, 4), lambda, &cfg, 1e-6)?;
        println!(
            "identical columns at lambda {lambda}: beta_1 = {:.8}, beta_4 = {:.8}",
            rep.beta_i, rep.beta_j
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
