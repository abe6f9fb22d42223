use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the command line. Each maps to a stable code printed
/// on standard error.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] seqest::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn code(&self) -> &'static str {
        use seqest::Error as E;
        match self {
            CliError::Usage(_) => "E_USAGE",
            CliError::Core(E::Config(_)) => "E_CONFIG",
            CliError::Core(E::Precondition(_)) => "E_PRECONDITION",
            CliError::Core(E::Input(_)) => "E_INPUT",
            CliError::Core(E::Exhausted { .. }) => "E_EXHAUSTED",
            CliError::Core(E::OutOfRange { .. }) => "E_RANGE",
            CliError::Core(E::Io { .. }) | CliError::Io { .. } => "E_IO",
            CliError::Csv(_) => "E_CSV",
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
