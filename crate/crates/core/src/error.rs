use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter is out of range or shapes disagree.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// An operation was called on data that does not satisfy its contract,
    /// e.g. fitting a reward model on reward-free transitions.
    #[error("contract violated: {0}")]
    Contract(String),

    /// A constructed object fails one of its structural invariants.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("runtime: {0}")]
    Runtime(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// 2 for bad input, 3 for failures while computing or writing.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::Contract(_) | Error::Malformed { .. } | Error::Config(_) | Error::Json(_) => 2,
            Error::Io(e) if e.kind() == std::io::ErrorKind::NotFound => 2,
            Error::Invariant(_) | Error::Runtime(_) | Error::Io(_) | Error::Csv(_) => 3,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
