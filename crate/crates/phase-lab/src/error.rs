//! Crate-wide error type and exit-code mapping.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or argument is out of its documented range.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A rejection-sampling loop ran out of attempts. The attempt count is
    /// a valid measurement in its own right (acceptance frequencies).
    #[error("generation budget exhausted after {attempts} attempts")]
    GenerationExhausted { attempts: u64 },

    /// A hill-climbing walk ran out of swaps before reaching its target.
    #[error("swap budget of {budget} exhausted")]
    SwapBudgetExhausted { budget: u64 },

    /// Malformed instance, graph, or result file.
    #[error("parse error in {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 1 usage, 2 runtime/exhaustion, 3 i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) => 1,
            Error::GenerationExhausted { .. } => 2,
            Error::SwapBudgetExhausted { .. } => 2,
            Error::Parse { .. } => 2,
            Error::Io { .. } => 3,
        }
    }
}
