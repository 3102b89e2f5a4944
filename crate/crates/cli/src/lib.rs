//! Command-line layer over `triwell`: configuration, the six commands and
//! their CSV / JSON output.

pub mod commands;
pub mod config;
pub mod output;

use thiserror::Error;

pub use commands::run;
pub use config::{Cli, FileConfig, RunConfig};
pub use output::{Cell, Report, Table};

/// Exit codes: 64 usage, 2 complex spectrum, 3 no convergence, 1 otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("complex spectrum: {0}")]
    ComplexSpectrum(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("identity violated: {0}")]
    IdentityViolation(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 64,
            CliError::ComplexSpectrum(_) => 2,
            CliError::NoConvergence(_) => 3,
            CliError::IdentityViolation(_) | CliError::Io(_) => 1,
        }
    }
}
