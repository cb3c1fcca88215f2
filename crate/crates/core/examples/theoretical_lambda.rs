// The data-independent regularization level λ = c·p^¼·Φ⁻¹(1 − α/2p)/√n.

use ped::algorithm::{lambda_f, theoretical_c, theoretical_lambda};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (alpha, c) = (0.05, 1.1);
    println!("{:>6} {:>6} {:>10}", "n", "p", "lambda");
    for (n, p) in [(100, 200), (100, 12), (200, 400), (400, 800), (800, 1600), (205, 500)] {
        println!("{n:>6} {p:>6} {:>10.4}", theoretical_lambda(n, p, alpha, c));
    }
    println!("\nrefit level after screening to p* columns (n = 100):");
    for p_star in [1, 5, 12, 30, 60] {
        println!(
            "  p* = {p_star:>3}: lambda_F = {:.4}, screening shape sqrt(p* ln(2p/alpha)) = {:.3}",
            lambda_f(100, p_star, alpha, c),
            theoretical_c(200, p_star, alpha)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
