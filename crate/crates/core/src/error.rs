use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset not found: {path}: {reason}")]
    DatasetNotFound { path: PathBuf, reason: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("graph already carries reciprocal relations")]
    AlreadyAugmented,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    InvalidConfig(Vec<String>),

    #[error("bad {kind} file: {message}")]
    Format { kind: &'static str, message: String },

    #[error(
        "checkpoint was trained on dataset {checkpoint:016x} but the dataset hashes to {dataset:016x}"
    )]
    VocabularyMismatch { checkpoint: u64, dataset: u64 },

    #[error("non-finite loss at step {step} (L1={l1}, L2={l2}) on batch {batch}")]
    NonFiniteLoss {
        step: u64,
        l1: f64,
        l2: f64,
        batch: String,
    },

    #[error("cache {path} unusable ({reason}) and rebuilding is disabled")]
    CacheUnavailable { path: PathBuf, reason: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn format(kind: &'static str, message: impl Into<String>) -> Self {
        Error::Format {
            kind,
            message: message.into(),
        }
    }
}
