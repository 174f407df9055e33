//! Corrupts the Breast Cancer table at 20% MCAR, trains CGAIN with default
//! settings and compares missing-cell RMSE against mean imputation.
//!
//! cargo run --release --example impute_breast_cancer [iterations]

use std::time::Instant;

use cgain::data::{corrupt_mcar, load_csv, LabelColumn, LoadOptions};
use cgain::eval::rmse_missing;
use cgain::imputer::{baseline_mean_impute, train, ImputerConfig};
use cgain::nn::Rng;

fn main() -> cgain::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/breast_cancer.csv");
    let data = load_csv(path, &LabelColumn::Name("diagnosis".into()), &LoadOptions::default())?;
    println!("{} rows, {} features, classes {:?}", data.rows(), data.width(), data.class_names());

    let incomplete = corrupt_mcar(&data, 0.2, &mut Rng::new(7))?;
    let mut config = ImputerConfig::default();
    if let Some(iters) = std::env::args().nth(1) {
        config.iterations = iters.parse().expect("iteration count");
    }

    let mut rng = Rng::new(11);
    let start = Instant::now();
    let (model, trace) = train(&incomplete, &config, &mut rng)?;
    let imputed = model.impute(&incomplete, &mut rng)?;
    let seconds = start.elapsed().as_secs_f64();

    let cgain = rmse_missing(&data, &imputed, incomplete.mask())?;
    let mean = rmse_missing(&data, &baseline_mean_impute(&incomplete)?, incomplete.mask())?;
    if let Some(last) = trace.rows.last() {
        println!(
            "final interval: d_loss {:.4}, adversarial {:.4}, reconstruction {:.5}",
            last.discriminator_loss, last.adversarial_loss, last.reconstruction_loss
        );
    }
    println!("CGAIN RMSE {:.4} ({seconds:.1}s)", cgain.overall);
    println!("mean  RMSE {:.4}", mean.overall);
    for (name, value) in data.class_names().iter().zip(&cgain.per_class) {
        if let Some(v) = value {
            println!("  class {name}: {v:.4}");
        }
    }
    Ok(())
}
