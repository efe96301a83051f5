//! Scenario runner behind the `bottleneck` binary.
//!
//! A scenario file names a mode and the parameter blocks it needs; [`runner`]
//! turns it into CSV tables and a key-value summary, which [`output`] writes
//! atomically.

pub mod output;
pub mod runner;
pub mod scenario;

use thiserror::Error;

/// Failure of a run, mapped onto the process exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// The scenario file or an override could not be read.
    #[error("scenario error: {0}")]
    Parse(String),
    /// Parameters were read but are outside their admissible ranges.
    #[error("{0}")]
    Invalid(String),
    /// A numerical routine broke down.
    #[error("{0}")]
    Solver(String),
    /// The iteration stopped at its cap; outputs were still written.
    #[error("solver did not converge: {0}")]
    NotConverged(String),
    /// Reading the scenario or writing results failed.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit status.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Solver(_) | CliError::NotConverged(_) => 3,
            CliError::Invalid(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl From<bottleneck_core::Error> for CliError {
    fn from(e: bottleneck_core::Error) -> Self {
        use bottleneck_core::Error as E;
        match e {
            E::InvalidParameter(_) | E::InvalidCase(_) | E::InvalidStrategy(_) => CliError::Invalid(e.to_string()),
            E::NumericFailure(_) | E::InfeasibleResponse(_) => CliError::Solver(e.to_string()),
        }
    }
}
