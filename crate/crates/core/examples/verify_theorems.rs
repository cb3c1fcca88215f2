// Run groups of the numerical verification suite and print the table.
//
// ```bash
// cargo run --release --example verify_theorems -- kkt
// ```

use ped::verification::{run_suite, VerifyConfig, CHECK_GROUPS};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let groups: Vec<String> = match std::env::args().nth(1) {
        Some(g) => vec![g],
        None => ["norm", "identical", "grouping", "convergence"].map(String::from).to_vec(),
    };
    println!("available groups: {}", CHECK_GROUPS.join(", "));
    for group in groups {
        let report = run_suite(&VerifyConfig { only: Some(group), ..VerifyConfig::default() })?;
        print!("{}", report.to_table());
        if !report.all_passed() {
            return Err("verification failed".into());
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
