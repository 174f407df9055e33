//! Mean and MICE-lite imputation of Breast Cancer at several missing rates.
//!
//! cargo run --release --example baselines

use cgain::data::{corrupt_mcar, load_csv, LabelColumn, LoadOptions};
use cgain::eval::rmse_missing;
use cgain::imputer::{baseline_mean_impute, baseline_mice_lite, DEFAULT_SWEEPS};
use cgain::nn::Rng;

fn main() -> cgain::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/breast_cancer.csv");
    let data = load_csv(path, &LabelColumn::Name("diagnosis".into()), &LoadOptions::default())?;
    println!("rate   mean     mice_lite");
    for (k, rate) in [0.05, 0.1, 0.15, 0.2].into_iter().enumerate() {
        let incomplete = corrupt_mcar(&data, rate, &mut Rng::new(k as u64))?;
        let mean = rmse_missing(&data, &baseline_mean_impute(&incomplete)?, incomplete.mask())?;
        let mice = rmse_missing(&data, &baseline_mice_lite(&incomplete, DEFAULT_SWEEPS)?, incomplete.mask())?;
        println!("{rate:<5}  {:.4}   {:.4}", mean.overall, mice.overall);
    }
    Ok(())
}
