use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}: duplicate key {key}")]
    DuplicateKey { line: u64, key: String },

    #[error("insufficient data: need at least {needed} values, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("degenerate event: {0}")]
    DegenerateEvent(String),

    #[error("degenerate regression: {0}")]
    DegenerateRegression(String),

    #[error("numeric error: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Process exit code: 1 for I/O, 2 for validation, 3 for numeric/domain failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 1,
            Error::Parse { .. }
            | Error::DuplicateKey { .. }
            | Error::InsufficientData { .. }
            | Error::Validation(_) => 2,
            Error::DegenerateEvent(_) | Error::DegenerateRegression(_) | Error::Numeric(_) => 3,
        }
    }
}
