// AR(1) simulation study: TP, MS and RMSE over replicates.
//
// ```bash
// cargo run --release --example simulation_study -- 0.9 30
// ```

use ped::algorithm::PedConfig;
use ped::simulation::{run_study, SimulationSpec};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let rho: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.9);
    let replicates: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(4);

    let spec = SimulationSpec::example_one(100, 200, rho, replicates, 2024)?;
    let report = run_study(&spec, &PedConfig::default())?;
    print!("{}", report.to_table(&spec));
    println!();
    for line in report.to_csv().lines().take(6) {
        println!("{line}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
