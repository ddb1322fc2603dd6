use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A requested size exceeds a configured capacity bound.
    #[error("capacity exceeded: {what} = {requested} exceeds the limit {limit}")]
    Capacity {
        what: &'static str,
        requested: u128,
        limit: u128,
    },
    /// An argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// An input lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),
    /// A numerical routine failed (rank failure, non-convergence, ...).
    #[error("numerical failure: {message}")]
    Numerical {
        message: String,
        /// Condition estimate or residual carried for diagnostics.
        diagnostic: Option<f64>,
    },
    /// A sample set was empty where at least one sample is required.
    #[error("empty sample set: {0}")]
    EmptySample(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>, diagnostic: Option<f64>) -> Self {
        Error::Numerical {
            message: msg.into(),
            diagnostic,
        }
    }
}
