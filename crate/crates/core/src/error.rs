use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid codebook: {0}")]
    Codebook(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("row layout mismatch: model expects {expected} columns, row has {found}")]
    Layout { expected: usize, found: usize },

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: String, iterations: usize },

    #[error("non-finite training loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Process exit code for the command-line runner: 1 usage, 2 data, 3 non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::NonConvergence { .. } | Error::NonFiniteLoss { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
