pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod imputer;
pub mod nn;

pub use error::{Error, Result};
