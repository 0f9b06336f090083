use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The search space holds no marked state; amplitude amplification cannot converge.
    #[error("no target states (M = 0)")]
    NoTargets,

    #[error("state of {requested} qubits exceeds the capacity limit of {limit} qubits")]
    Capacity { requested: usize, limit: usize },

    #[error("gate `{0}` is not a basis permutation")]
    NotPermutation(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("data format error at line {line}: {message}")]
    DataFormat { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
