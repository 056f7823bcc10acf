//! Error types shared across the simulator.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: bad magic in {field}: expected {expected:#010x}, found {found:#010x}")]
    BadMagic {
        path: PathBuf,
        field: &'static str,
        expected: u32,
        found: u32,
    },

    #[error("{path}: truncated {field}: expected {expected} bytes, found {found}")]
    Truncated {
        path: PathBuf,
        field: String,
        expected: usize,
        found: usize,
    },

    #[error("image/label count mismatch: {images} images vs {labels} labels")]
    CountMismatch { images: usize, labels: usize },

    #[error("{path}: file size {size} is not a multiple of the {record}-byte record length")]
    BadRecordLength {
        path: PathBuf,
        size: usize,
        record: usize,
    },

    #[error("{path}: corrupt record {index}: {reason}")]
    CorruptRecord {
        path: PathBuf,
        index: usize,
        reason: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite loss at local training step {step}")]
    NonFiniteLoss { step: usize },

    #[error("non-finite weights after server update")]
    NonFiniteWeights,

    #[error("round {round} failed: {source}")]
    RoundFailed {
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    /// Wrap an error with the federation round it occurred in.
    pub fn at_round(self, round: usize) -> Error {
        Error::RoundFailed {
            round,
            source: Box::new(self),
        }
    }

    pub fn invalid_argument(msg: impl Into<String>) -> Error {
        Error::InvalidArgument(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Error {
        Error::Config(msg.into())
    }
}
