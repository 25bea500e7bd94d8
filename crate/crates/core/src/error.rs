use std::path::PathBuf;

use thiserror::Error;

use crate::likelihood::DegenerateReason;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("ML estimate does not exist: {0}")]
    Degenerate(DegenerateReason),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("pathology threshold exceeded: {0}")]
    Pathology(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Serde(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// Short machine-readable code used by the CLI and the C ABI.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) | Error::Parse { .. } | Error::Io(_) | Error::Serde(_) => {
                "E_INPUT"
            }
            Error::Degenerate(_) | Error::Numerical(_) => "E_NUMERIC",
            Error::Pathology(_) => "E_PATHOLOGY",
        }
    }

    /// Process exit status: 2 input error, 3 numerical failure, 4 pathology threshold.
    pub fn exit_code(&self) -> i32 {
        match self.code() {
            "E_INPUT" => 2,
            "E_NUMERIC" => 3,
            _ => 4,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
