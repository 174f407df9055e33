//! Finite-difference check of the discriminator and generator step gradients
//! for a freshly initialised CGAIN model on a small synthetic table.
//!
//! cargo run --release --example gradient_check

use cgain::data::{corrupt_mcar, synth};
use cgain::imputer::{
    discriminator_gradients, discriminator_objective, generator_gradients, generator_objective, Batch, ImputerConfig,
    ImputerModel,
};
use cgain::nn::gradcheck::check_gradients;
use cgain::nn::{DenseNet, Rng};

fn main() -> cgain::Result<()> {
    let data = synth::to_dataset(&synth::class_separated(40, 1))?;
    let incomplete = corrupt_mcar(&data, 0.3, &mut Rng::new(2))?;
    for seed in 0..3 {
        let mut rng = Rng::new(seed);
        let model = ImputerModel::for_dataset(&data, ImputerConfig::default(), &mut rng)?;
        let cond = model.condition_for(&data)?;
        let idx: Vec<usize> = (0..8).collect();
        let batch = Batch::draw(&model, incomplete.features(), incomplete.mask().matrix(), &cond, &idx, &mut rng)?;

        let (_, dg) = discriminator_gradients(&model, &batch)?;
        let d = check_gradients(model.discriminator(), &dg, 1e-5, 1e-4, |net: &DenseNet| {
            let probe = model.with_networks(model.generator().clone(), net.clone()).unwrap();
            discriminator_objective(&probe, &batch).unwrap()
        });
        let (_, gg) = generator_gradients(&model, &batch)?;
        let g = check_gradients(model.generator(), &gg, 1e-5, 1e-4, |net: &DenseNet| {
            let probe = model.with_networks(net.clone(), model.discriminator().clone()).unwrap();
            generator_objective(&probe, &batch).unwrap().total
        });
        println!(
            "seed {seed}: D {} params, max rel err {:.2e}; G {} params, max rel err {:.2e}",
            d.checked, d.max_relative_error, g.checked, g.max_relative_error
        );
    }
    Ok(())
}
