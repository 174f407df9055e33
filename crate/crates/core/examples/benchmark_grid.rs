//! Runs the repetition benchmark over every method on a synthetic table and
//! prints the report and per-method timings.
//!
//! cargo run --release --example benchmark_grid

use cgain::data::synth;
use cgain::eval::{run_benchmark, BenchmarkConfig};

fn main() -> cgain::Result<()> {
    let data = synth::to_dataset(&synth::linear_with_noise(600, 6, 0.05, 1))?;
    let mut config = BenchmarkConfig {
        dataset: "linear".into(),
        rates: vec![0.1, 0.2],
        repetitions: 3,
        root_seed: 17,
        ..BenchmarkConfig::default()
    };
    config.settings.adversarial.iterations = 1500;
    let report = run_benchmark(&data, &config)?;
    print!("{}", report.to_csv()?);
    println!();
    print!("{}", report.timing_csv()?);
    Ok(())
}
