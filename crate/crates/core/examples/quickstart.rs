// Fit PED regression to a small synthetic data set and print the model.
//
// ```bash
// cargo run --release --example quickstart
// ```

use ndarray::{Array1, Array2};
use ped::algorithm::{ped_fit, PedConfig};
use ped::data::RawDataset;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let (n, p) = (80, 40);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x: Array2<f64> = Array2::from_shape_fn((n, p), |_| StandardNormal.sample(&mut rng));
    let mut beta_true = Array1::zeros(p);
    beta_true[2] = 1.5;
    beta_true[9] = -1.0;
    beta_true[30] = 0.8;
    let noise = Array1::from_shape_fn(n, |_| 0.5 * Distribution::<f64>::sample(&StandardNormal, &mut rng));
    let y = x.dot(&beta_true) + noise + 4.0;

    let raw = RawDataset::new(x, y, None)?;
    let ds = raw.standardize()?;
    let fit = ped_fit(&ds, &PedConfig::default())?;
    let (beta, intercept) = ds.destandardize(fit.beta.view())?;

    println!("chosen lambda0 = {}, C = {}, lambda_F = {:.4}", fit.lambda0, fit.c_threshold, fit.lambda_final);
    println!("k_hat = {:.4}, residual norm = {:.4}", fit.k_hat_final, fit.residual_norm);
    println!("intercept = {intercept:.4}");
    for (j, b) in beta.iter().enumerate().filter(|(_, b)| **b != 0.0) {
        println!("  {:<4} {b:>9.4}   (true {:.1})", raw.column_name(j), beta_true[j]);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
