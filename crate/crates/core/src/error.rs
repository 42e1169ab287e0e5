use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by scenario ingestion, model assembly and solving.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input file; names the file and 1-based line.
    #[error("{file}:{line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },

    /// A domain invariant does not hold on the data.
    #[error("invalid data: {0}")]
    Invalid(String),

    /// Model inputs are mutually inconsistent or out of contract.
    #[error("model error: {0}")]
    Model(String),

    /// A solver returned values that do not decode into a lawful plan.
    #[error("solution rejected: {0}")]
    Solution(String),

    /// The external solver process failed; carries its raw output.
    #[error("solver failure: {0}")]
    Solver(String),

    /// Instance exceeds the limits of an exhaustive backend.
    #[error("instance too large: {0}")]
    TooLarge(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(file: impl Into<String>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            msg: msg.into(),
        }
    }
}
