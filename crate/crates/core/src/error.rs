use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by estimators, streams and file access.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("block sampler exhausted after {reads} reads")]
    Exhausted { reads: u64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}: value {value} at element {element} outside declared range [{lo}, {hi}]")]
    OutOfRange {
        path: PathBuf,
        element: u64,
        value: f64,
        lo: f64,
        hi: f64,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
