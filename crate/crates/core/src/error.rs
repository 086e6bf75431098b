use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the augmentation pipeline and its supporting modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid splits: {0}")]
    InvalidSplits(String),

    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    DimensionMismatch {
        expected: usize,
        actual: usize,
        context: String,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("missing dataset file {0}")]
    MissingFile(PathBuf),

    #[error("{file}:{line}: {message}")]
    Malformed { file: String, line: usize, message: String },

    #[error("count mismatch for `{field}`: meta says {expected}, found {actual}")]
    CountMismatch {
        field: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("classifier needs at least two classes, found {0}")]
    SingleClass(usize),

    #[error("non-finite feature value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("not enough samples: {samples} samples for {folds} folds")]
    TooFewSamples { samples: usize, folds: usize },

    #[error("empty cluster")]
    EmptyCluster,

    #[error("empty mask: {0}")]
    EmptyMask(&'static str),

    #[error("node {0} has no label")]
    Unlabeled(usize),

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("self-training iteration {iteration}: {source}")]
    Diffusion {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
