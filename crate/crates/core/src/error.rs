use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing file: {0}")]
    MissingFile(PathBuf),
    #[error("grid file {path} holds {actual} bytes, expected {expected}")]
    LengthMismatch {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("expected 12 acquisitions, found {0}")]
    BadAcquisitionCount(usize),
    #[error("schema error: {0}")]
    SchemaError(String),
    #[error("invalid values: {0}")]
    InvalidValues(String),
    #[error("mask references pixel {0}, which is not valid in the stack")]
    MaskNotValid(usize),
    #[error("too few rows: need at least {needed}, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("non-finite loss at epoch {epoch}: {detail}")]
    NonFiniteLoss { epoch: usize, detail: String },
    #[error("length mismatch: {0} vs {1}")]
    SeriesLength(usize, usize),
    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),
    #[error("bad histogram range or bin count: {0}")]
    BadRange(String),
    #[error("train and test pixel sets intersect at {0} pixels")]
    DisjointnessViolation(usize),
    #[error("synthetic scene too small: {width}x{height}, minimum is 9x9")]
    TooSmall { width: u32, height: u32 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
