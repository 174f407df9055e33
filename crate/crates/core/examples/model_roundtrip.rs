//! Trains a short CGAIN run, saves it, loads it back and checks that both
//! copies impute identically from the same seed.
//!
//! cargo run --release --example model_roundtrip

use cgain::data::{corrupt_mcar, synth};
use cgain::imputer::io::{load_model, save_model};
use cgain::imputer::{train, ImputerConfig};
use cgain::nn::Rng;

fn main() -> cgain::Result<()> {
    let data = synth::to_dataset(&synth::class_separated(300, 8))?;
    let incomplete = corrupt_mcar(&data, 0.2, &mut Rng::new(1))?;
    let config = ImputerConfig {
        iterations: 500,
        ..ImputerConfig::default()
    };
    let (model, trace) = train(&incomplete, &config, &mut Rng::new(2))?;
    println!("trained {} iterations, {} trace rows", trace.iterations_run, trace.rows.len());

    let path = std::env::temp_dir().join("cgain_roundtrip.cgain");
    save_model(&model, &path)?;
    let loaded = load_model(&path)?;
    println!("saved {} bytes to {}", std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0), path.display());

    let a = model.impute(&incomplete, &mut Rng::new(9))?;
    let b = loaded.impute(&incomplete, &mut Rng::new(9))?;
    println!("identical imputations: {}", a.features() == b.features());
    Ok(())
}
