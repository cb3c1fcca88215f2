// How the selection rule picks (λ₀, C) from the grid.

use ped::algorithm::{ped_fit, PedConfig, Selection};
use ped::simulation::{generate_replicate, score_estimate, SimulationSpec};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SimulationSpec::example_one(100, 200, 0.9, 1, 17)?;
    let ds = generate_replicate(&spec, 0)?.standardize()?;

    let fit = ped_fit(&ds, &PedConfig::default())?;
    println!("{:>7} {:>6} {:>6} {:>10} {:>10} {:>10}", "lambda0", "C", "kept", "k_hat(1)", "k_hat", "AIC");
    for g in &fit.grid {
        println!(
            "{:>7} {:>6} {:>6} {:>10.4} {:>10.4} {:>10.2}{}",
            g.lambda0, g.c_threshold, g.kept, g.initial_k_hat, g.k_hat, g.aic,
            if g.degenerate { "  (degenerate)" } else { "" }
        );
    }

    for selection in [Selection::MaximizeKHat, Selection::MaximizeRefitKHat, Selection::Aic] {
        let fit = ped_fit(&ds, &PedConfig { selection, ..PedConfig::default() })?;
        let (beta, _) = ds.destandardize(fit.beta.view())?;
        let (tp, ms, se) = score_estimate(&beta, &spec.beta_star);
        println!(
            "{:<10}: lambda0 {}, C {}, TP {tp}, MS {ms}, |b - b*| {:.3}",
            selection.to_string(), fit.lambda0, fit.c_threshold, se.sqrt()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
