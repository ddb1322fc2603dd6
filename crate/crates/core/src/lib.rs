//! Numerical laboratory for the anticoncentration of chaotic quantum
//! circuits.

pub mod circuit;
pub mod closed_forms;
pub mod commutant;
pub mod ensemble;
pub mod error;
pub mod estimation;
pub mod linalg;
pub mod persist;
pub mod quadrature;
pub mod replica;
pub mod rng;
pub mod universal;

pub use ensemble::EnsembleKind;
pub use error::{Error, Result};
