use thiserror::Error;

use crate::algorithms::Trace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{0}")]
    Compressor(String),

    #[error("schedule produced a non-finite value at round {round}: {what}")]
    NonFiniteSchedule { round: u64, what: &'static str },

    #[error("non-finite objective at round {round}")]
    NonFiniteObjective { round: u64, trace: Box<Trace> },

    #[error("malformed cache: {0}")]
    Cache(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
