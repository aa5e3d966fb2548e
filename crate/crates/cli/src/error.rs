//! Error categories mapped to process exit codes.

use thiserror::Error;

/// CLI-level error with an exit-code category.
#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid scenario, preset, metric list, or flag combination (exit 2).
    #[error("invalid configuration: {0}")]
    Config(String),
    /// Simulation or analytic evaluation failed (exit 3).
    #[error("runtime failure: {0}")]
    Runtime(String),
    /// File could not be read or written (exit 4).
    #[error("i/o failure: {0}")]
    Io(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }

    pub fn io(msg: impl Into<String>) -> Self {
        CliError::Io(msg.into())
    }

    /// Process exit code for this category.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<coexsim_core::Error> for CliError {
    fn from(e: coexsim_core::Error) -> Self {
        match e {
            coexsim_core::Error::Config(msg) => CliError::Config(msg),
            other => CliError::Runtime(other.to_string()),
        }
    }
}
