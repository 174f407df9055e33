use serde::{Deserialize, Serialize};

use super::loss::AdversarialSign;
use crate::data::{Dataset, FeatureSchema, IncompleteDataset};
use crate::error::{Error, Result};
use crate::nn::{Activation, DenseNet, ForwardCache, Layer, Matrix, OptimizerConfig, Rng};

/// Hyperparameters of adversarial imputation. `conditioning: false` gives GAIN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImputerConfig {
    pub conditioning: bool,
    pub alpha: f64,
    pub batch_size: usize,
    pub iterations: usize,
    /// Hidden layer width as a multiple of the feature count.
    pub hidden_mult: usize,
    pub optimizer: OptimizerConfig,
    pub adversarial_sign: AdversarialSign,
    /// Upper bound of the uniform noise fed at missing cells.
    pub noise_scale: f64,
    /// Trace row every `log_interval` iterations.
    pub log_interval: usize,
    /// Stop once the windowed reconstruction loss improves by less than
    /// `early_stop_tolerance` over `early_stop_window` iterations.
    pub early_stop: bool,
    pub early_stop_window: usize,
    pub early_stop_tolerance: f64,
    /// Draw mini-batches with per-class quotas instead of uniformly.
    pub stratified_batches: bool,
}

impl Default for ImputerConfig {
    fn default() -> Self {
        Self {
            conditioning: true,
            alpha: 100.0,
            batch_size: 128,
            iterations: 10_000,
            hidden_mult: 3,
            optimizer: OptimizerConfig::default(),
            adversarial_sign: AdversarialSign::Negated,
            noise_scale: 0.01,
            log_interval: 100,
            early_stop: false,
            early_stop_window: 500,
            early_stop_tolerance: 1e-5,
            stratified_batches: false,
        }
    }
}

impl ImputerConfig {
    pub fn gain() -> Self {
        Self {
            conditioning: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::invalid("alpha", format!("must be positive, got {}", self.alpha)));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size", "must be at least 1"));
        }
        if self.hidden_mult == 0 {
            return Err(Error::invalid("hidden multiplier", "must be at least 1"));
        }
        if self.log_interval == 0 {
            return Err(Error::invalid("log interval", "must be at least 1"));
        }
        if !(self.noise_scale > 0.0 && self.noise_scale <= 1.0) {
            return Err(Error::invalid(
                "noise scale",
                format!("must lie in (0, 1], got {}", self.noise_scale),
            ));
        }
        if self.early_stop && self.early_stop_window == 0 {
            return Err(Error::invalid("early stop window", "must be at least 1"));
        }
        self.optimizer.validate()
    }
}

/// Generator/discriminator pair plus the metadata needed to apply them.
///
/// Generator input: `[X̃ (zeros at missing), M, (1-M) ⊙ Z, C]`, width `3d + c`.
/// Discriminator input: `[X̂, H, C]`, width `2d + c`. `C` is the one-hot label
/// block when conditioning and empty otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct ImputerModel {
    pub(crate) generator: DenseNet,
    pub(crate) discriminator: DenseNet,
    pub(crate) width: usize,
    pub(crate) condition_width: usize,
    pub(crate) config: ImputerConfig,
    pub(crate) schema: FeatureSchema,
    pub(crate) class_names: Vec<String>,
}

/// Generator proposals and the completed batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    /// `X̄`, the generator output for every cell.
    pub x_bar: Matrix,
    /// `X̂ = M ⊙ X̃ + (1 - M) ⊙ X̄`.
    pub x_hat: Matrix,
}

impl ImputerModel {
    /// Freshly initialized networks for `width` features and a condition block
    /// of `condition_width` columns.
    pub fn new(
        width: usize,
        condition_width: usize,
        schema: FeatureSchema,
        class_names: Vec<String>,
        config: ImputerConfig,
        rng: &mut Rng,
    ) -> Result<Self> {
        config.validate()?;
        if width == 0 {
            return Err(Error::invalid("feature width", "must be at least 1"));
        }
        if schema.width() != width {
            return Err(Error::shape("ImputerModel schema", width, schema.width()));
        }
        if !config.conditioning && condition_width != 0 {
            return Err(Error::invalid(
                "condition width",
                format!("{condition_width} label columns given with conditioning off"),
            ));
        }
        let hidden = config.hidden_mult * width;
        let generator = DenseNet::new(
            3 * width + condition_width,
            hidden,
            width,
            Activation::Relu,
            Activation::Sigmoid,
            rng,
        )?;
        let discriminator = DenseNet::new(
            2 * width + condition_width,
            hidden,
            width,
            Activation::Relu,
            Activation::Sigmoid,
            rng,
        )?;
        Ok(Self {
            generator,
            discriminator,
            width,
            condition_width,
            config,
            schema,
            class_names,
        })
    }

    /// Model sized for `dataset`; the condition block is its one-hot labels
    /// when `config.conditioning` is set.
    pub fn for_dataset(dataset: &Dataset, config: ImputerConfig, rng: &mut Rng) -> Result<Self> {
        let condition_width = if config.conditioning { dataset.class_count() } else { 0 };
        Self::new(
            dataset.width(),
            condition_width,
            dataset.schema().clone(),
            dataset.class_names().to_vec(),
            config,
            rng,
        )
    }

    /// Reassembles a model from its parts, checking every width.
    pub fn from_parts(
        generator: DenseNet,
        discriminator: DenseNet,
        condition_width: usize,
        config: ImputerConfig,
        schema: FeatureSchema,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let width = schema.width();
        let checks = [
            ("generator input", 3 * width + condition_width, generator.input_width()),
            ("generator output", width, generator.output_width()),
            ("discriminator input", 2 * width + condition_width, discriminator.input_width()),
            ("discriminator output", width, discriminator.output_width()),
        ];
        for (what, expected, found) in checks {
            if expected != found {
                return Err(Error::shape("ImputerModel::from_parts", format!("{what} {expected}"), found));
            }
        }
        if !config.conditioning && condition_width != 0 {
            return Err(Error::invalid("condition width", "non-zero with conditioning off"));
        }
        Ok(Self {
            generator,
            discriminator,
            width,
            condition_width,
            config,
            schema,
            class_names,
        })
    }

    /// Same model with both networks replaced; widths must match.
    pub fn with_networks(&self, generator: DenseNet, discriminator: DenseNet) -> Result<Self> {
        Self::from_parts(
            generator,
            discriminator,
            self.condition_width,
            self.config.clone(),
            self.schema.clone(),
            self.class_names.clone(),
        )
    }

    pub fn generator(&self) -> &DenseNet {
        &self.generator
    }

    pub fn discriminator(&self) -> &DenseNet {
        &self.discriminator
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn condition_width(&self) -> usize {
        self.condition_width
    }

    pub fn conditioning(&self) -> bool {
        self.config.conditioning
    }

    pub fn config(&self) -> &ImputerConfig {
        &self.config
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// Condition block for `dataset`: its one-hot labels, or an empty `n x 0`
    /// matrix when conditioning is off.
    pub fn condition_for(&self, dataset: &Dataset) -> Result<Matrix> {
        if !self.config.conditioning {
            return Ok(Matrix::zeros(dataset.rows(), 0));
        }
        if dataset.class_count() != self.condition_width {
            return Err(Error::shape(
                "label one-hot width",
                self.condition_width,
                dataset.class_count(),
            ));
        }
        Ok(dataset.labels().clone())
    }

    pub(crate) fn check_batch(&self, x_tilde: &Matrix, mask: &Matrix, condition: &Matrix) -> Result<()> {
        if x_tilde.cols() != self.width {
            return Err(Error::shape("generate data width", self.width, x_tilde.cols()));
        }
        x_tilde.same_shape(mask, "generate mask")?;
        if condition.cols() != self.condition_width || condition.rows() != x_tilde.rows() {
            return Err(Error::shape(
                "generate condition block",
                format!("{}x{}", x_tilde.rows(), self.condition_width),
                format!("{}x{}", condition.rows(), condition.cols()),
            ));
        }
        Ok(())
    }

    pub(crate) fn generator_input(
        &self,
        x_tilde: &Matrix,
        mask: &Matrix,
        condition: &Matrix,
        noise: &Matrix,
    ) -> Result<Matrix> {
        let masked_noise = mask.zip_map(noise, |m, z| (1.0 - m) * z)?;
        Matrix::hstack(&[x_tilde, mask, &masked_noise, condition])
    }

    pub(crate) fn draw_noise(&self, rows: usize, rng: &mut Rng) -> Result<Matrix> {
        rng.uniform(0.0, self.config.noise_scale, rows, self.width)
    }

    /// Generator pass with explicit noise; returns proposals, completion and
    /// the cache for backprop.
    pub fn generate_with_noise(
        &self,
        x_tilde: &Matrix,
        mask: &Matrix,
        condition: &Matrix,
        noise: &Matrix,
    ) -> Result<(Generated, ForwardCache)> {
        self.check_batch(x_tilde, mask, condition)?;
        let input = self.generator_input(x_tilde, mask, condition, noise)?;
        let (x_bar, cache) = self.generator.forward(&input)?;
        let x_hat = combine(x_tilde, mask, &x_bar)?;
        Ok((Generated { x_bar, x_hat }, cache))
    }

    /// Runs the generator on a batch; missing slots of `x_tilde` must be 0.
    pub fn generate(
        &self,
        x_tilde: &Matrix,
        mask: &Matrix,
        condition: &Matrix,
        rng: &mut Rng,
    ) -> Result<Generated> {
        let noise = self.draw_noise(x_tilde.rows(), rng)?;
        self.generate_with_noise(x_tilde, mask, condition, &noise)
            .map(|(g, _)| g)
    }

    pub(crate) fn discriminator_input(
        &self,
        x_hat: &Matrix,
        hint: &Matrix,
        condition: &Matrix,
    ) -> Result<Matrix> {
        if x_hat.cols() != self.width {
            return Err(Error::shape("discriminate data width", self.width, x_hat.cols()));
        }
        x_hat.same_shape(hint, "discriminate hint")?;
        if condition.cols() != self.condition_width || condition.rows() != x_hat.rows() {
            return Err(Error::shape(
                "discriminate condition block",
                format!("{}x{}", x_hat.rows(), self.condition_width),
                format!("{}x{}", condition.rows(), condition.cols()),
            ));
        }
        Matrix::hstack(&[x_hat, hint, condition])
    }

    /// Per-cell probability that each cell was observed.
    pub fn discriminate(&self, x_hat: &Matrix, hint: &Matrix, condition: &Matrix) -> Result<Matrix> {
        let input = self.discriminator_input(x_hat, hint, condition)?;
        self.discriminator.predict(&input)
    }

    /// Fills every missing cell with the generator's proposal; observed cells
    /// are copied through unchanged.
    pub fn impute(&self, incomplete: &IncompleteDataset, rng: &mut Rng) -> Result<Dataset> {
        let condition = self.condition_for(incomplete.dataset())?;
        let completed = self.impute_matrix(incomplete.features(), incomplete.mask().matrix(), &condition, rng)?;
        incomplete.dataset().with_features(completed)
    }

    /// [`ImputerModel::impute`] on raw matrices.
    pub fn impute_matrix(
        &self,
        x_tilde: &Matrix,
        mask: &Matrix,
        condition: &Matrix,
        rng: &mut Rng,
    ) -> Result<Matrix> {
        self.check_batch(x_tilde, mask, condition)?;
        const CHUNK: usize = 4096;
        let mut out = Matrix::zeros(0, self.width);
        let mut rows = Vec::with_capacity(x_tilde.rows() * self.width);
        let mut start = 0;
        while start < x_tilde.rows() {
            let end = (start + CHUNK).min(x_tilde.rows());
            let idx: Vec<usize> = (start..end).collect();
            let generated = self.generate(
                &x_tilde.select_rows(&idx),
                &mask.select_rows(&idx),
                &condition.select_rows(&idx),
                rng,
            )?;
            rows.extend_from_slice(generated.x_hat.as_slice());
            start = end;
        }
        if !rows.is_empty() {
            out = Matrix::from_vec(x_tilde.rows(), self.width, rows)?;
        }
        Ok(out)
    }

    /// Folds a constant condition column into the first-layer biases of both
    /// networks, giving an unconditional model that computes the same function
    /// for inputs whose condition block is all ones. Only valid for a
    /// single-column condition block.
    pub fn fold_constant_condition(&self) -> Result<ImputerModel> {
        if self.condition_width != 1 {
            return Err(Error::invalid(
                "condition width",
                format!("folding needs exactly one condition column, found {}", self.condition_width),
            ));
        }
        let fold = |net: &DenseNet, row: usize| -> Result<DenseNet> {
            let mut layers = net.layers().clone();
            let first = &mut layers[0];
            for (b, w) in first.bias.iter_mut().zip(first.weights.row(row)) {
                *b += *w;
            }
            first.weights.remove_row(row);
            DenseNet::from_layers(layers, net.hidden_activation(), net.output_activation())
        };
        let generator = fold(&self.generator, 3 * self.width)?;
        let discriminator = fold(&self.discriminator, 2 * self.width)?;
        Self::from_parts(
            generator,
            discriminator,
            0,
            ImputerConfig {
                conditioning: false,
                ..self.config.clone()
            },
            self.schema.clone(),
            self.class_names.clone(),
        )
    }

    /// Adds zero-weight condition columns, turning an unconditional model into
    /// a conditional one that ignores its labels.
    pub fn with_inert_condition(&self, condition_width: usize) -> Result<ImputerModel> {
        if self.condition_width != 0 {
            return Err(Error::invalid("condition width", "model is already conditioned"));
        }
        let extend = |net: &DenseNet| -> Result<DenseNet> {
            let mut layers: [Layer; 3] = net.layers().clone();
            let fan_out = layers[0].fan_out();
            let at = layers[0].fan_in();
            for k in 0..condition_width {
                layers[0].weights.insert_row(at + k, &vec![0.0; fan_out]);
            }
            DenseNet::from_layers(layers, net.hidden_activation(), net.output_activation())
        };
        Self::from_parts(
            extend(&self.generator)?,
            extend(&self.discriminator)?,
            condition_width,
            ImputerConfig {
                conditioning: true,
                ..self.config.clone()
            },
            self.schema.clone(),
            self.class_names.clone(),
        )
    }
}

/// `M ⊙ X̃ + (1 - M) ⊙ X̄`, selecting rather than blending so observed cells
/// are copied bit for bit.
pub fn combine(x_tilde: &Matrix, mask: &Matrix, x_bar: &Matrix) -> Result<Matrix> {
    x_tilde.same_shape(mask, "combine mask")?;
    x_tilde.same_shape(x_bar, "combine proposals")?;
    Ok(Matrix::from_fn(x_tilde.rows(), x_tilde.cols(), |i, j| {
        if mask.get(i, j) == 1.0 {
            x_tilde.get(i, j)
        } else {
            x_bar.get(i, j)
        }
    }))
}
