//! Dense-network numerical engine: matrices, two-hidden-layer networks,
//! hand-derived backpropagation, SGD/Adam, and a seeded random source.

pub mod gradcheck;
mod matrix;
mod net;
mod optim;
mod rng;

pub use matrix::Matrix;
pub use net::{sigmoid, Activation, DenseNet, ForwardCache, Gradients, Layer};
pub use optim::{OptimizerConfig, OptimizerKind, OptimizerState};
pub use rng::{derive_seed, Rng};

/// Lower clamp applied to probabilities before taking a logarithm.
pub const LOG_EPSILON: f64 = 1e-8;

/// `ln(max(p, LOG_EPSILON))`.
#[inline]
pub fn clamped_ln(p: f64) -> f64 {
    p.max(LOG_EPSILON).ln()
}

/// Derivative of [`clamped_ln`]; zero where the clamp is active.
#[inline]
pub fn clamped_ln_derivative(p: f64) -> f64 {
    if p > LOG_EPSILON {
        1.0 / p
    } else {
        0.0
    }
}
