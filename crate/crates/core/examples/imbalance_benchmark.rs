//! Subsamples a credit-default-like table to several minority shares and
//! compares minority-class RMSE of CGAIN and GAIN.
//!
//! cargo run --release --example imbalance_benchmark

use cgain::data::synth;
use cgain::eval::{run_imbalance_benchmark, BenchmarkConfig, EvalMode};
use cgain::imputer::Method;

fn main() -> cgain::Result<()> {
    let data = synth::to_dataset(&synth::default_credit_like(3000, 0.22, 5))?;
    let mut config = BenchmarkConfig {
        dataset: "credit_like".into(),
        methods: vec![Method::Cgain, Method::Gain],
        rates: vec![0.2],
        repetitions: 2,
        fractions: vec![0.1, 0.2],
        root_seed: 3,
        ..BenchmarkConfig::default()
    };
    config.settings.adversarial.iterations = 1500;
    let report = run_imbalance_benchmark(&data, &config)?;
    let minority = &report.class_names[1];
    println!("fraction  method  minority RMSE");
    for &fraction in &config.fractions {
        for &method in &config.methods {
            if let Some(cell) = report.class_cell(EvalMode::Repetition, method, 0.2, Some(fraction), minority) {
                println!("{fraction:<8}  {method:<6}  {:.4}", cell.rmse_mean.unwrap_or(f64::NAN));
            }
        }
    }
    Ok(())
}
