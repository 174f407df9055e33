//! Draws hint matrices for a random mask and shows that each row reveals all
//! but one uniformly chosen cell, which is set to 0.5.
//!
//! cargo run --release --example hint_mechanism

use cgain::imputer::sample_hint;
use cgain::nn::Rng;

fn main() -> cgain::Result<()> {
    let mut rng = Rng::new(3);
    let mask = rng.bernoulli(0.8, 4, 5)?;
    let hint = sample_hint(&mask, &mut rng)?;
    println!("mask -> hint");
    for i in 0..mask.rows() {
        println!("{:?} -> {:?}", mask.row(i), hint.values.row(i));
    }

    let (rows, d) = (100_000, 5);
    let mask = rng.bernoulli(0.8, rows, d)?;
    let hint = sample_hint(&mask, &mut rng)?;
    let mut counts = vec![0usize; d];
    for k in hint.hidden_columns() {
        counts[k] += 1;
    }
    println!("hidden-column frequencies over {rows} rows (expected {:.3}):", 1.0 / d as f64);
    for (k, c) in counts.iter().enumerate() {
        println!("  column {k}: {:.4}", *c as f64 / rows as f64);
    }
    Ok(())
}
