use serde::{Deserialize, Serialize};

use super::{DenseNet, Gradients};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self::adam(1e-3)
    }
}

impl OptimizerConfig {
    pub fn adam(learning_rate: f64) -> Self {
        Self {
            kind: OptimizerKind::Adam,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn sgd(learning_rate: f64) -> Self {
        Self {
            kind: OptimizerKind::Sgd,
            ..Self::adam(learning_rate)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::invalid(
                "learning rate",
                format!("must be positive, got {}", self.learning_rate),
            ));
        }
        if self.kind == OptimizerKind::Adam {
            for (name, beta) in [("beta1", self.beta1), ("beta2", self.beta2)] {
                if !(0.0..1.0).contains(&beta) {
                    return Err(Error::invalid("adam beta", format!("{name}={beta}")));
                }
            }
            if !(self.epsilon > 0.0) {
                return Err(Error::invalid("adam epsilon", self.epsilon.to_string()));
            }
        }
        Ok(())
    }
}

/// Optimizer state for one parameter set. Moment buffers are only allocated for Adam.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    config: OptimizerConfig,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    step: u64,
}

impl OptimizerState {
    /// State for parameters with the given slice lengths.
    pub fn new(config: OptimizerConfig, shapes: &[usize]) -> Result<Self> {
        config.validate()?;
        let buffers = || match config.kind {
            OptimizerKind::Adam => shapes.iter().map(|&n| vec![0.0; n]).collect(),
            OptimizerKind::Sgd => Vec::new(),
        };
        Ok(Self {
            config,
            first: buffers(),
            second: buffers(),
            step: 0,
        })
    }

    pub fn for_net(config: OptimizerConfig, net: &DenseNet) -> Result<Self> {
        let mut probe = net.clone();
        let shapes: Vec<usize> = probe.parameters_mut().iter().map(|s| s.len()).collect();
        Self::new(config, &shapes)
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, parameters: &mut [&mut [f64]], gradients: &[&[f64]]) -> Result<()> {
        if parameters.len() != gradients.len() {
            return Err(Error::shape(
                "optimizer parameter groups",
                parameters.len(),
                gradients.len(),
            ));
        }
        for (i, (p, g)) in parameters.iter().zip(gradients).enumerate() {
            if p.len() != g.len() {
                return Err(Error::shape("optimizer gradient", p.len(), g.len()));
            }
            if self.config.kind == OptimizerKind::Adam && self.first[i].len() != p.len() {
                return Err(Error::shape(
                    "optimizer moment buffer",
                    self.first[i].len(),
                    p.len(),
                ));
            }
        }
        if self.config.kind == OptimizerKind::Adam && self.first.len() != parameters.len() {
            return Err(Error::shape(
                "optimizer moment groups",
                self.first.len(),
                parameters.len(),
            ));
        }

        self.step += 1;
        let lr = self.config.learning_rate;
        match self.config.kind {
            OptimizerKind::Sgd => {
                for (p, g) in parameters.iter_mut().zip(gradients) {
                    for (w, &dw) in p.iter_mut().zip(g.iter()) {
                        *w -= lr * dw;
                    }
                }
            }
            OptimizerKind::Adam => {
                let OptimizerConfig {
                    beta1,
                    beta2,
                    epsilon,
                    ..
                } = self.config;
                let t = self.step as i32;
                let correction1 = 1.0 - beta1.powi(t);
                let correction2 = 1.0 - beta2.powi(t);
                for (i, (p, g)) in parameters.iter_mut().zip(gradients).enumerate() {
                    let m = &mut self.first[i];
                    let v = &mut self.second[i];
                    for j in 0..p.len() {
                        let dw = g[j];
                        m[j] = beta1 * m[j] + (1.0 - beta1) * dw;
                        v[j] = beta2 * v[j] + (1.0 - beta2) * dw * dw;
                        let m_hat = m[j] / correction1;
                        let v_hat = v[j] / correction2;
                        p[j] -= lr * m_hat / (v_hat.sqrt() + epsilon);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn step_net(&mut self, net: &mut DenseNet, gradients: &Gradients) -> Result<()> {
        let mut params = net.parameters_mut();
        self.step(&mut params, &gradients.slices())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sgd_textbook_update() {
        let mut state = OptimizerState::new(OptimizerConfig::sgd(0.1), &[1]).unwrap();
        let mut p = [1.0];
        state.step(&mut [&mut p[..]], &[&[2.0][..]]).unwrap();
        assert!((p[0] - 0.8).abs() < 1e-15);
        assert_eq!(state.steps(), 1);
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        for config in [OptimizerConfig::sgd(0.5), OptimizerConfig::adam(0.5)] {
            let mut state = OptimizerState::new(config, &[3]).unwrap();
            let mut p = [0.3, -1.0, 2.5];
            let before = p;
            state.step(&mut [&mut p[..]], &[&[0.0; 3][..]]).unwrap();
            assert_eq!(p, before);
        }
    }

    #[test]
    fn adam_first_step_matches_scalar_formula() {
        // Scalar reference: m = (1-b1) g, v = (1-b2) g^2, bias-corrected.
        let (lr, b1, b2, eps, g) = (0.001f64, 0.9f64, 0.999f64, 1e-8f64, 0.37f64);
        let m_hat = ((1.0 - b1) * g) / (1.0 - b1);
        let v_hat = ((1.0 - b2) * g * g) / (1.0 - b2);
        let expected_update = lr * m_hat / (v_hat.sqrt() + eps);

        let mut state = OptimizerState::new(OptimizerConfig::adam(lr), &[1]).unwrap();
        let mut p = [1.0];
        state.step(&mut [&mut p[..]], &[&[g][..]]).unwrap();
        assert!(((1.0 - p[0]) - expected_update).abs() < 1e-15);
        // First Adam step moves each parameter by ~lr regardless of gradient scale.
        assert!((expected_update - 0.001).abs() < 1e-10);
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(OptimizerState::new(OptimizerConfig::sgd(0.0), &[1]).is_err());
        assert!(OptimizerState::new(OptimizerConfig::adam(-1.0), &[1]).is_err());
        let mut state = OptimizerState::new(OptimizerConfig::sgd(0.1), &[2]).unwrap();
        let mut p = [0.0, 0.0];
        assert!(state.step(&mut [&mut p[..]], &[&[1.0][..]]).is_err());
        assert_eq!(state.steps(), 0);
    }

    proptest! {
        #[test]
        fn sgd_is_exact(params in prop::collection::vec(-10.0f64..10.0, 1..20),
                        lr in 1e-4f64..1.0,
                        seed in 0u64..1000) {
            let grads: Vec<f64> = params.iter().enumerate()
                .map(|(i, p)| (p * 1.7 + i as f64 + seed as f64).sin())
                .collect();
            let mut updated = params.clone();
            let mut state = OptimizerState::new(OptimizerConfig::sgd(lr), &[params.len()]).unwrap();
            state.step(&mut [&mut updated[..]], &[&grads[..]]).unwrap();
            for ((u, p), g) in updated.iter().zip(&params).zip(&grads) {
                prop_assert_eq!(*u, p - lr * g);
            }
        }
    }
}
