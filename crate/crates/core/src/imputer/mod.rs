//! Conditional adversarial imputation (CGAIN), its unconditional variant
//! (GAIN), and the mean / MICE-lite baselines.

mod baseline;
mod hint;
pub mod io;
mod loss;
mod model;
mod train;

use serde::{Deserialize, Serialize};

pub use baseline::{
    baseline_mean_impute, baseline_mice_lite, MeanImputer, MiceLite, DEFAULT_SWEEPS, RIDGE_LAMBDA,
};
pub use hint::{hint_from_selector, sample_hint, sample_mask_hint, Hint};
pub use loss::{
    discriminator_loss_and_gradient, generator_loss_and_gradients, loss_discriminator,
    loss_generator, AdversarialSign, GeneratorLoss,
};
pub use model::{combine, Generated, ImputerConfig, ImputerModel};
pub use train::{
    discriminator_gradients, discriminator_objective, generator_gradients, generator_objective,
    reconstruction_loss, train, train_model, train_with_condition, Batch, TraceRow, TrainingTrace,
};

use crate::data::{Dataset, IncompleteDataset};
use crate::error::{Error, Result};
use crate::nn::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Cgain,
    Gain,
    Mean,
    MiceLite,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Cgain, Method::Gain, Method::Mean, Method::MiceLite];

    pub fn name(self) -> &'static str {
        match self {
            Method::Cgain => "cgain",
            Method::Gain => "gain",
            Method::Mean => "mean",
            Method::MiceLite => "mice_lite",
        }
    }

    pub fn is_adversarial(self) -> bool {
        matches!(self, Method::Cgain | Method::Gain)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::invalid("method", format!("'{s}' (expected cgain|gain|mean|mice_lite)"))
            })
    }
}

/// Settings shared by every method; each method reads what it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MethodSettings {
    /// Adversarial settings; `conditioning` is overridden by the method.
    pub adversarial: ImputerConfig,
    pub mice_sweeps: usize,
}

impl Default for MethodSettings {
    fn default() -> Self {
        Self {
            adversarial: ImputerConfig::default(),
            mice_sweeps: DEFAULT_SWEEPS,
        }
    }
}

impl MethodSettings {
    /// Adversarial config with conditioning set for `method`.
    pub fn imputer_config(&self, method: Method) -> ImputerConfig {
        ImputerConfig {
            conditioning: method == Method::Cgain,
            ..self.adversarial.clone()
        }
    }
}

/// A method fitted on one table, replayable on another with the same columns.
#[derive(Debug, Clone, PartialEq)]
pub enum FittedImputer {
    Adversarial(Box<ImputerModel>),
    Mean(MeanImputer),
    MiceLite(MiceLite),
}

impl FittedImputer {
    /// Fits `method` on `incomplete` and returns it with the completed table.
    pub fn fit(
        method: Method,
        incomplete: &IncompleteDataset,
        settings: &MethodSettings,
        rng: &mut Rng,
    ) -> Result<(Self, Dataset)> {
        match method {
            Method::Cgain | Method::Gain => {
                let (model, _) = train(incomplete, &settings.imputer_config(method), rng)?;
                let completed = model.impute(incomplete, rng)?;
                Ok((FittedImputer::Adversarial(Box::new(model)), completed))
            }
            Method::Mean => {
                let fitted = MeanImputer::fit(incomplete)?;
                let completed = fitted.apply(incomplete)?;
                Ok((FittedImputer::Mean(fitted), completed))
            }
            Method::MiceLite => {
                let (fitted, completed) = MiceLite::fit(incomplete, settings.mice_sweeps)?;
                Ok((FittedImputer::MiceLite(fitted), completed))
            }
        }
    }

    pub fn apply(&self, incomplete: &IncompleteDataset, rng: &mut Rng) -> Result<Dataset> {
        match self {
            FittedImputer::Adversarial(model) => model.impute(incomplete, rng),
            FittedImputer::Mean(m) => m.apply(incomplete),
            FittedImputer::MiceLite(m) => m.apply(incomplete),
        }
    }
}

/// Fits `method` on `incomplete` and returns the completed table.
pub fn impute_with(
    method: Method,
    incomplete: &IncompleteDataset,
    settings: &MethodSettings,
    rng: &mut Rng,
) -> Result<Dataset> {
    FittedImputer::fit(method, incomplete, settings, rng).map(|(_, completed)| completed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("missforest".parse::<Method>().is_err());
    }

    #[test]
    fn settings_set_conditioning_per_method() {
        let s = MethodSettings::default();
        assert!(s.imputer_config(Method::Cgain).conditioning);
        assert!(!s.imputer_config(Method::Gain).conditioning);
        assert_eq!(s.imputer_config(Method::Gain).batch_size, 128);
    }
}
