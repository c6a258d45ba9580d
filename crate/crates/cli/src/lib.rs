//! Command-line driver: stream generation, simulation, ratio sweeps, drift
//! scoring and plotting, each recorded in a replayable manifest.

pub mod commands;
pub mod manifest;
pub mod svg;
pub mod tables;

use thiserror::Error;

pub use commands::{execute, Command};
pub use manifest::RunManifest;

/// Failure of a command, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }
}

impl From<adapt_core::Error> for CliError {
    fn from(e: adapt_core::Error) -> Self {
        if e.is_config_error() {
            CliError::Config(e.to_string())
        } else if e.is_data_error() {
            CliError::Data(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub(crate) fn io_err(path: &std::path::Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}
