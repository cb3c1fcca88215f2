// Load a CSV with a header row, fit, and map the coefficients back to column names.
//
// With no argument a demo file is written to a temporary directory.
//
// ```bash
// cargo run --release --example fit_csv -- data.csv response
// ```

use std::io::Write;

use ped::algorithm::{ped_fit, PedConfig};
use ped::data::{load_csv, ResponseColumn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn write_demo(path: &std::path::Path) -> std::io::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "yield,temp,pressure,flow,noise_a,noise_b,constant")?;
    for _ in 0..60 {
        let row: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = 10.0 + 3.0 * row[0] - 2.0 * row[2] + rng.random_range(-0.3..0.3);
        writeln!(f, "{y},{},{},{},{},{},1", row[0], row[1], row[2], row[3], row[4])?;
    }
    Ok(())
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("process.csv");
    write_demo(&path)?;
    fit_file(&path, &ResponseColumn::Name("yield".into()))
}

fn fit_file(path: &std::path::Path, response: &ResponseColumn) -> Result<(), Box<dyn std::error::Error>> {
    let raw = load_csv(path, response)?;
    let ds = raw.standardize()?;
    for &j in ds.dropped_columns() {
        println!("dropped zero-variance column {}", raw.column_name(j));
    }
    let fit = ped_fit(&ds, &PedConfig::default())?;
    let (beta, intercept) = ds.destandardize(fit.beta.view())?;
    println!("{} rows, {} predictors, {} selected", raw.n(), raw.p(), fit.model_size());
    println!("{:<12}{:>12}", "term", "estimate");
    println!("{:<12}{:>12.4}", "(intercept)", intercept);
    for &j in &fit.active_set {
        let raw_j = ds.retained_columns()[j];
        println!("{:<12}{:>12.4}", raw.column_name(raw_j), beta[raw_j]);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match args.as_slice() {
        [path, response, ..] => fit_file(path.as_ref(), &response.parse()?),
        _ => run_example(),
    }
}
