// The penalty norm, the sparsity index k̂ and the optimality cosines.

use ndarray::array;
use ped::algorithm::{ped_fit_problem, PedConfig};
use ped::data::Problem;
use ped::objective::{dual_norm, geometric_mean_norm, k_hat, l1_norm, l2_norm, ped_objective};
use ped::optimizer::{minimize, OptimizerConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    // ‖β‖₂ ≤ √(‖β‖₁‖β‖₂) ≤ ‖β‖₁, with k̂ = 1 for one nonzero and 1/p^¼ when all are equal.
    for beta in [array![3.0, 0.0, 0.0, 0.0], array![1.0, 1.0, 0.0, 0.0], array![1.0, 1.0, 1.0, 1.0]] {
        println!(
            "beta = {beta}: l2 {:.3}  pen {:.3}  l1 {:.3}  k_hat {:.3}",
            l2_norm(beta.view()),
            geometric_mean_norm(beta.view()),
            l1_norm(beta.view()),
            k_hat(beta.view())?
        );
    }

    // A direction spread over k columns costs λ·k^¾, so the dual norm of a flat
    // correlation vector grows like k^¼.
    let (d, u) = dual_norm(array![0.5, 0.5, 0.5, 0.5].view());
    println!("dual norm of four cosines 0.5 = {d:.3}, maximizer {u}");

    let x = array![[0.5, 0.5], [0.5, -0.5], [-0.5, 0.5], [-0.5, -0.5]];
    let y = array![2.0, 0.7, -1.2, -1.5];
    let problem = Problem::new(x.view(), y.view())?;
    let lambda = 0.3;
    let rep = minimize(&problem, lambda, problem.correlations().view(), &OptimizerConfig::tight())?;
    let parts = ped_objective(&problem, rep.beta_opt.view(), lambda)?;
    let kh = parts.k_hat.expect("nonzero solution");
    println!("\nminimizer {:.5} after {} iterations ({:?})", rep.beta_opt, rep.iterations, rep.termination);
    println!("objective {:.6} = residual {:.6} + {lambda}·{:.6}", parts.objective, parts.residual_norm, parts.penalty_norm);
    let cos = parts.cosines.expect("non-zero residual");
    for j in 0..2 {
        let b = rep.beta_opt[j];
        let lhs = b / l2_norm(rep.beta_opt.view());
        let rhs = kh * (2.0 * cos[j] / lambda - kh * b.signum());
        println!("  coordinate {j}: beta/|beta| = {lhs:.6}, k(2cos/lambda - k sgn) = {rhs:.6}");
    }

    let fit = ped_fit_problem(&problem, &PedConfig::default().with_fixed_grid(0.5, 0.75))?;
    println!("\nfull procedure on the same data keeps columns {:?}", fit.active_set);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
