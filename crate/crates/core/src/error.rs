use std::path::PathBuf;

use thiserror::Error;

use crate::ingest::FactualityLabel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("line {line}: {message}")]
    Line { line: usize, message: String },

    #[error("empty snapshot set")]
    EmptySnapshots,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("embedding for {id} has length {len}, expected {expected}")]
    EmbeddingLength { id: String, len: usize, expected: usize },

    #[error("feature dictionary mismatch: {0}")]
    DictionaryMismatch(String),

    #[error("model expects feature dictionary {expected}, got {found}")]
    FingerprintMismatch { expected: String, found: String },

    #[error("training data contains a single class")]
    SingleClass,

    #[error("class {0} absent from training data")]
    MissingClass(FactualityLabel),

    #[error("insufficient minority samples for class {class}: {count}")]
    InsufficientMinority { class: FactualityLabel, count: usize },

    #[error("non-finite feature value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("leakage: {0}")]
    Leakage(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
