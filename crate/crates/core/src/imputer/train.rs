use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::hint::{sample_hint, Hint};
use super::loss::{discriminator_loss_and_gradient, generator_loss_and_gradients, GeneratorLoss};
use super::model::{ImputerConfig, ImputerModel};
use crate::data::{ColumnKind, IncompleteDataset};
use crate::error::{Error, Result};
use crate::nn::{Gradients, Matrix, OptimizerState, Rng};

/// One logged interval: losses are averaged over the interval's iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    /// 1-based index of the last iteration in the interval.
    pub iteration: usize,
    pub discriminator_loss: f64,
    pub adversarial_loss: f64,
    pub reconstruction_loss: f64,
    /// Seconds since training started.
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub rows: Vec<TraceRow>,
    pub iterations_run: usize,
    /// Iteration at which the early-stop rule fired.
    pub stopped_early: Option<usize>,
    pub batch_size: usize,
}

impl TrainingTrace {
    pub fn to_writer(&self, mut writer: impl Write) -> Result<()> {
        let mut out = String::from("iteration,d_loss,g_adversarial,g_reconstruction,seconds\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{:.6}\n",
                r.iteration, r.discriminator_loss, r.adversarial_loss, r.reconstruction_loss, r.seconds
            ));
        }
        writer
            .write_all(out.as_bytes())
            .map_err(|e| Error::io("<trace>", e))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.to_writer(std::io::BufWriter::new(file))
    }
}

/// A mini-batch with every random draw fixed, so a training step is a
/// deterministic function of the networks.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub x_tilde: Matrix,
    pub mask: Matrix,
    pub condition: Matrix,
    pub noise: Matrix,
    pub hint: Hint,
}

impl Batch {
    /// Rows `indices` of the data plus fresh noise and hint draws.
    pub fn draw(
        model: &ImputerModel,
        x_tilde: &Matrix,
        mask: &Matrix,
        condition: &Matrix,
        indices: &[usize],
        rng: &mut Rng,
    ) -> Result<Self> {
        let mask_b = mask.select_rows(indices);
        let noise = model.draw_noise(indices.len(), rng)?;
        let hint = sample_hint(&mask_b, rng)?;
        Ok(Self {
            x_tilde: x_tilde.select_rows(indices),
            mask: mask_b,
            condition: condition.select_rows(indices),
            noise,
            hint,
        })
    }
}

/// Discriminator loss on `batch` with the generator held fixed.
pub fn discriminator_objective(model: &ImputerModel, batch: &Batch) -> Result<f64> {
    let (generated, _) =
        model.generate_with_noise(&batch.x_tilde, &batch.mask, &batch.condition, &batch.noise)?;
    let m_hat = model.discriminate(&generated.x_hat, &batch.hint.values, &batch.condition)?;
    discriminator_loss_and_gradient(&m_hat, &batch.mask, &batch.hint.selector).map(|(l, _)| l)
}

/// Discriminator loss and its parameter gradients.
pub fn discriminator_gradients(model: &ImputerModel, batch: &Batch) -> Result<(f64, Gradients)> {
    let (generated, _) =
        model.generate_with_noise(&batch.x_tilde, &batch.mask, &batch.condition, &batch.noise)?;
    let input = model.discriminator_input(&generated.x_hat, &batch.hint.values, &batch.condition)?;
    let (m_hat, cache) = model.discriminator.forward(&input)?;
    let (loss, grad) = discriminator_loss_and_gradient(&m_hat, &batch.mask, &batch.hint.selector)?;
    let (grads, _) = model.discriminator.backward(&cache, &grad)?;
    Ok((loss, grads))
}

/// Generator loss on `batch` with the discriminator held fixed.
pub fn generator_objective(model: &ImputerModel, batch: &Batch) -> Result<GeneratorLoss> {
    let (generated, _) =
        model.generate_with_noise(&batch.x_tilde, &batch.mask, &batch.condition, &batch.noise)?;
    let m_hat = model.discriminate(&generated.x_hat, &batch.hint.values, &batch.condition)?;
    let cfg = model.config();
    generator_loss_and_gradients(
        &m_hat,
        &batch.mask,
        &batch.hint.selector,
        &generated.x_bar,
        &batch.x_tilde,
        &model.schema().kinds(),
        cfg.alpha,
        cfg.adversarial_sign,
    )
    .map(|(l, _, _)| l)
}

/// Generator loss and its parameter gradients, back-propagated through the
/// discriminator and the completion step.
pub fn generator_gradients(model: &ImputerModel, batch: &Batch) -> Result<(GeneratorLoss, Gradients)> {
    let (generated, g_cache) =
        model.generate_with_noise(&batch.x_tilde, &batch.mask, &batch.condition, &batch.noise)?;
    let input = model.discriminator_input(&generated.x_hat, &batch.hint.values, &batch.condition)?;
    let (m_hat, d_cache) = model.discriminator.forward(&input)?;
    let cfg = model.config();
    let (loss, grad_m_hat, grad_recon) = generator_loss_and_gradients(
        &m_hat,
        &batch.mask,
        &batch.hint.selector,
        &generated.x_bar,
        &batch.x_tilde,
        &model.schema().kinds(),
        cfg.alpha,
        cfg.adversarial_sign,
    )?;
    let (_, d_input_grad) = model.discriminator.backward(&d_cache, &grad_m_hat)?;
    // Only missing cells of X̂ depend on X̄.
    let d = model.width();
    let grad_x_bar = Matrix::from_fn(grad_recon.rows(), d, |i, j| {
        let through_d = if batch.mask.get(i, j) == 1.0 { 0.0 } else { d_input_grad.get(i, j) };
        through_d + grad_recon.get(i, j)
    });
    let (grads, _) = model.generator.backward(&g_cache, &grad_x_bar)?;
    Ok((loss, grads))
}

/// Reconstruction term of the generator loss over every row, with fresh noise.
pub fn reconstruction_loss(
    model: &ImputerModel,
    incomplete: &IncompleteDataset,
    rng: &mut Rng,
) -> Result<f64> {
    let condition = model.condition_for(incomplete.dataset())?;
    let x_tilde = incomplete.features();
    let mask = incomplete.mask().matrix();
    let generated = model.generate(x_tilde, mask, &condition, rng)?;
    let kinds = model.schema().kinds();
    let mut total = 0.0;
    for i in 0..x_tilde.rows() {
        for (j, kind) in kinds.iter().enumerate() {
            if mask.get(i, j) != 1.0 {
                continue;
            }
            let x = x_tilde.get(i, j);
            let x_prime = generated.x_bar.get(i, j);
            total += match kind {
                ColumnKind::Continuous => (x_prime - x).powi(2),
                ColumnKind::Binary => -x * crate::nn::clamped_ln(x_prime),
            };
        }
    }
    Ok(total / x_tilde.rows() as f64)
}

/// Trains a fresh model on `incomplete`. The condition block is the one-hot
/// label matrix when `config.conditioning` is set.
pub fn train(
    incomplete: &IncompleteDataset,
    config: &ImputerConfig,
    rng: &mut Rng,
) -> Result<(ImputerModel, TrainingTrace)> {
    config.validate()?;
    let condition = if config.conditioning {
        incomplete.dataset().labels().clone()
    } else {
        Matrix::zeros(incomplete.rows(), 0)
    };
    train_with_condition(incomplete, &condition, config, rng)
}

/// [`train`] with an explicit condition block of any width (including zero).
pub fn train_with_condition(
    incomplete: &IncompleteDataset,
    condition: &Matrix,
    config: &ImputerConfig,
    rng: &mut Rng,
) -> Result<(ImputerModel, TrainingTrace)> {
    config.validate()?;
    if condition.rows() != incomplete.rows() {
        return Err(Error::shape("condition block rows", incomplete.rows(), condition.rows()));
    }
    let dataset = incomplete.dataset();
    let model = ImputerModel::new(
        dataset.width(),
        condition.cols(),
        dataset.schema().clone(),
        dataset.class_names().to_vec(),
        config.clone(),
        rng,
    )?;
    train_model(model, incomplete, condition, rng)
}

fn check_observed_columns(incomplete: &IncompleteDataset) -> Result<()> {
    let mask = incomplete.mask().matrix();
    for j in 0..mask.cols() {
        if (0..mask.rows()).all(|i| mask.get(i, j) == 0.0) {
            return Err(Error::Data(format!(
                "column '{}' has no observed values",
                incomplete.dataset().schema().columns[j].name
            )));
        }
    }
    Ok(())
}

/// Continues training `model` from its current weights with fresh optimizer
/// state.
pub fn train_model(
    mut model: ImputerModel,
    incomplete: &IncompleteDataset,
    condition: &Matrix,
    rng: &mut Rng,
) -> Result<(ImputerModel, TrainingTrace)> {
    let config = model.config().clone();
    config.validate()?;
    let n = incomplete.rows();
    if n == 0 {
        return Err(Error::Data("cannot train on an empty dataset".into()));
    }
    check_observed_columns(incomplete)?;
    let x_tilde = incomplete.features();
    let mask = incomplete.mask().matrix();
    model.check_batch(x_tilde, mask, condition)?;

    let batch_size = if config.batch_size > n {
        log::warn!("batch size {} exceeds {n} rows, clamped to {n}", config.batch_size);
        n
    } else {
        config.batch_size
    };
    let sampler = BatchSampler::new(incomplete, batch_size, config.stratified_batches);
    let mut d_opt = OptimizerState::for_net(config.optimizer, &model.discriminator)?;
    let mut g_opt = OptimizerState::for_net(config.optimizer, &model.generator)?;

    let start = Instant::now();
    let mut trace = TrainingTrace {
        batch_size,
        ..TrainingTrace::default()
    };
    let mut sums = [0.0f64; 3];
    let mut in_interval = 0usize;
    let mut window_sum = 0.0;
    let mut previous_window: Option<f64> = None;

    for it in 1..=config.iterations {
        let idx = sampler.sample(rng);
        let batch = Batch::draw(&model, x_tilde, mask, condition, &idx, rng)?;
        let (d_loss, d_grads) = discriminator_gradients(&model, &batch)?;
        d_opt.step_net(&mut model.discriminator, &d_grads)?;

        let idx = sampler.sample(rng);
        let batch = Batch::draw(&model, x_tilde, mask, condition, &idx, rng)?;
        let (g_loss, g_grads) = generator_gradients(&model, &batch)?;
        g_opt.step_net(&mut model.generator, &g_grads)?;

        sums[0] += d_loss;
        sums[1] += g_loss.adversarial;
        sums[2] += g_loss.reconstruction;
        in_interval += 1;
        trace.iterations_run = it;
        if it % config.log_interval == 0 {
            let k = in_interval as f64;
            trace.rows.push(TraceRow {
                iteration: it,
                discriminator_loss: sums[0] / k,
                adversarial_loss: sums[1] / k,
                reconstruction_loss: sums[2] / k,
                seconds: start.elapsed().as_secs_f64(),
            });
            log::debug!(
                "iteration {it}: d {:.5} adv {:.5} rec {:.6}",
                sums[0] / k,
                sums[1] / k,
                sums[2] / k
            );
            sums = [0.0; 3];
            in_interval = 0;
        }

        if config.early_stop {
            window_sum += g_loss.reconstruction;
            if it % config.early_stop_window == 0 {
                let mean = window_sum / config.early_stop_window as f64;
                window_sum = 0.0;
                if let Some(prev) = previous_window {
                    if prev - mean < config.early_stop_tolerance {
                        trace.stopped_early = Some(it);
                        break;
                    }
                }
                previous_window = Some(mean);
            }
        }
    }
    Ok((model, trace))
}

/// Row sampler: uniform with replacement, or per-class quotas proportional to
/// class sizes.
struct BatchSampler {
    batch_size: usize,
    rows: usize,
    strata: Option<Vec<(Vec<usize>, usize)>>,
}

impl BatchSampler {
    fn new(incomplete: &IncompleteDataset, batch_size: usize, stratified: bool) -> Self {
        let rows = incomplete.rows();
        let strata = stratified.then(|| {
            let dataset = incomplete.dataset();
            let mut members: Vec<Vec<usize>> = vec![Vec::new(); dataset.class_count()];
            for (i, &c) in dataset.classes().iter().enumerate() {
                members[c].push(i);
            }
            members.retain(|m| !m.is_empty());
            // Largest-remainder allocation of the batch across classes.
            let exact: Vec<f64> = members
                .iter()
                .map(|m| batch_size as f64 * m.len() as f64 / rows as f64)
                .collect();
            let mut quotas: Vec<usize> = exact.iter().map(|q| q.floor() as usize).collect();
            let mut order: Vec<usize> = (0..quotas.len()).collect();
            order.sort_by(|&a, &b| {
                let ra = exact[a] - exact[a].floor();
                let rb = exact[b] - exact[b].floor();
                rb.total_cmp(&ra).then(a.cmp(&b))
            });
            let mut missing = batch_size - quotas.iter().sum::<usize>();
            for &c in order.iter().cycle() {
                if missing == 0 {
                    break;
                }
                quotas[c] += 1;
                missing -= 1;
            }
            members.into_iter().zip(quotas).collect()
        });
        Self {
            batch_size,
            rows,
            strata,
        }
    }

    fn sample(&self, rng: &mut Rng) -> Vec<usize> {
        match &self.strata {
            None => (0..self.batch_size).map(|_| rng.index(self.rows)).collect(),
            Some(strata) => strata
                .iter()
                .flat_map(|(members, quota)| {
                    (0..*quota)
                        .map(|_| members[rng.index(members.len())])
                        .collect::<Vec<_>>()
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{corrupt_mcar, synth, Dataset};
    use crate::nn::gradcheck::check_gradients;
    use crate::nn::DenseNet;

    fn small_config(iterations: usize) -> ImputerConfig {
        ImputerConfig {
            iterations,
            batch_size: 32,
            log_interval: 10,
            ..ImputerConfig::default()
        }
    }

    fn separated(n: usize, seed: u64) -> Dataset {
        synth::to_dataset(&synth::class_separated(n, seed)).unwrap()
    }

    #[test]
    fn trace_rows_and_progress() {
        let data = separated(200, 1);
        let inc = corrupt_mcar(&data, 0.2, &mut Rng::new(2)).unwrap();
        let config = small_config(300);
        let untrained = ImputerModel::for_dataset(&data, config.clone(), &mut Rng::new(3)).unwrap();
        let before = reconstruction_loss(&untrained, &inc, &mut Rng::new(9)).unwrap();
        let (model, trace) = train(&inc, &config, &mut Rng::new(3)).unwrap();
        assert_eq!(trace.rows.len(), 30);
        assert!(trace.rows.windows(2).all(|w| w[0].iteration < w[1].iteration));
        let after = reconstruction_loss(&model, &inc, &mut Rng::new(9)).unwrap();
        assert!(after < before, "{after} !< {before}");
    }

    #[test]
    fn training_is_deterministic() {
        let data = separated(60, 4);
        let inc = corrupt_mcar(&data, 0.2, &mut Rng::new(4)).unwrap();
        let config = small_config(20);
        let (a, _) = train(&inc, &config, &mut Rng::new(5)).unwrap();
        let (b, _) = train(&inc, &config, &mut Rng::new(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn batch_is_clamped_to_rows() {
        let data = separated(20, 6);
        let inc = corrupt_mcar(&data, 0.2, &mut Rng::new(6)).unwrap();
        let (_, trace) = train(&inc, &small_config(5), &mut Rng::new(6)).unwrap();
        assert_eq!(trace.batch_size, 20);
    }

    #[test]
    fn stratified_quotas_follow_class_shares() {
        let data = synth::to_dataset(&synth::default_credit_like(400, 0.25, 1)).unwrap();
        let inc = IncompleteDataset::complete(data);
        let sampler = BatchSampler::new(&inc, 128, true);
        let idx = sampler.sample(&mut Rng::new(1));
        assert_eq!(idx.len(), 128);
        let minority = idx.iter().filter(|&&i| inc.dataset().classes()[i] == 1).count();
        assert_eq!(minority, 32);
    }

    #[test]
    fn early_stop_fires_on_a_plateau() {
        let data = separated(40, 7);
        let inc = corrupt_mcar(&data, 0.2, &mut Rng::new(7)).unwrap();
        let config = ImputerConfig {
            early_stop: true,
            early_stop_window: 5,
            early_stop_tolerance: 1e9,
            ..small_config(100)
        };
        let (_, trace) = train(&inc, &config, &mut Rng::new(7)).unwrap();
        assert_eq!(trace.stopped_early, Some(10));
        assert_eq!(trace.iterations_run, 10);
    }

    #[test]
    fn fully_missing_column_is_rejected() {
        let data = separated(10, 8);
        let mut m = Matrix::filled(10, 4, 1.0);
        for i in 0..10 {
            m.set(i, 2, 0.0);
        }
        let inc = IncompleteDataset::new(data, crate::data::MaskMatrix::new(m).unwrap()).unwrap();
        assert!(matches!(
            train(&inc, &small_config(2), &mut Rng::new(1)),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn step_gradients_match_finite_differences() {
        let data = separated(30, 10);
        let inc = corrupt_mcar(&data, 0.3, &mut Rng::new(10)).unwrap();
        let mut rng = Rng::new(11);
        let model = ImputerModel::for_dataset(&data, ImputerConfig::default(), &mut rng).unwrap();
        let cond = model.condition_for(&data).unwrap();
        let idx: Vec<usize> = (0..8).collect();
        let batch = Batch::draw(&model, inc.features(), inc.mask().matrix(), &cond, &idx, &mut rng).unwrap();

        let (_, dg) = discriminator_gradients(&model, &batch).unwrap();
        let report = check_gradients(&model.discriminator, &dg, 1e-5, 1e-4, |net: &DenseNet| {
            let mut probe = model.clone();
            probe.discriminator = net.clone();
            discriminator_objective(&probe, &batch).unwrap()
        });
        assert!(report.passed(), "{report:?}");

        let (_, gg) = generator_gradients(&model, &batch).unwrap();
        let report = check_gradients(&model.generator, &gg, 1e-5, 1e-4, |net: &DenseNet| {
            let mut probe = model.clone();
            probe.generator = net.clone();
            generator_objective(&probe, &batch).unwrap().total
        });
        assert!(report.passed(), "{report:?}");
    }
}
