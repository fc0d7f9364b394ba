use thiserror::Error;
use treesum_core::ModelError;

use crate::{EXIT_DATA, EXIT_NUMERIC, EXIT_USAGE};

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or configuration values.
    #[error("{0}")]
    Usage(String),
    /// Unreadable, malformed or inconsistent input.
    #[error("{0}")]
    Data(String),
    /// Training diverged.
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }

    pub fn data(msg: impl std::fmt::Display) -> Self {
        CliError::Data(msg.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        if e.is_numeric() {
            CliError::Numeric(e.to_string())
        } else if matches!(e, ModelError::Config(_)) {
            CliError::Usage(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}
