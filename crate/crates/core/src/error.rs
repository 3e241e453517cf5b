use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what} id {id} out of range (size {size})")]
    IdOutOfRange {
        what: &'static str,
        id: usize,
        size: usize,
    },

    #[error("input representation {got} does not match model kind {expected}")]
    RepresentationMismatch {
        expected: &'static str,
        got: &'static str,
    },

    #[error("empty token sequence")]
    EmptySequence,

    #[error("pooled embedding has zero norm")]
    ZeroNorm,

    #[error("negative pool for query {query} is empty")]
    EmptyPool { query: String },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Configuration problems are reported with exit code 1, everything else with 2.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::MissingFile(_))
    }
}
