//! Error type shared by all simulator and analytic modules.

use thiserror::Error;

/// Library-wide error.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// Invalid scenario or parameter set (caller can fix the inputs).
    #[error("invalid configuration: {0}")]
    Config(String),
    /// A numerical routine failed to converge or left its domain.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Not enough data to form the requested estimate.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    /// A conditioning event (e.g. "serving AP granted") did not occur;
    /// the caller should resample and track the acceptance rate.
    #[error("conditioning event failed: {0}")]
    ConditioningFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
    pub fn insufficient(msg: impl Into<String>) -> Self {
        Error::InsufficientData(msg.into())
    }
}
