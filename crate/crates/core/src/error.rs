use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, ApnnError>;

#[derive(Debug, Error)]
pub enum ApnnError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error at row {row}: {message}")]
    Csv { row: usize, message: String },
    #[error("empty dataset file")]
    EmptyFile,
    #[error("ragged row {row}: expected {expected} fields, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, column {column}: non-numeric feature {value:?}")]
    NonNumeric {
        row: usize,
        column: usize,
        value: String,
    },
    #[error("row {row}, column {column}: non-finite feature")]
    NonFiniteFeature { row: usize, column: usize },
    #[error("dataset needs at least 2 classes, found {found}")]
    TooFewClasses { found: usize },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("sample {index} has a zero feature vector and cannot be normalized")]
    ZeroNorm { index: usize },
    #[error("cannot split into {k} folds: class {class} has only {count} samples")]
    Split {
        class: usize,
        count: usize,
        k: usize,
    },
    #[error("fold count must be at least 2, got {0}")]
    InvalidFoldCount(usize),
    #[error("invalid quantizer: {0}")]
    InvalidQuantizer(String),
    #[error("non-finite value {0}")]
    NonFinite(f64),
    #[error("smoothing factor must be positive, got {0}")]
    InvalidSigma(f64),
    #[error("threshold must lie in (0, 1], got {0}")]
    InvalidTheta(f64),
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("class {0} has no stored columns")]
    EmptyCrossbar(usize),
    #[error("cannot pick a winner from an empty score list")]
    EmptyScores,
    #[error("invalid threshold policy: {0}")]
    InvalidPolicy(String),
    #[error("weight level {0} outside [0, 1]")]
    WeightOutOfRange(f64),
    #[error("invalid electrical config: {0}")]
    InvalidElectrical(String),
    #[error("cost table lists component {0} more than once")]
    DuplicateComponent(String),
    #[error("cost table is missing component {0}")]
    MissingComponent(String),
    #[error("invalid cost entry: {0}")]
    InvalidCost(String),
    #[error("unknown method {0:?}")]
    UnknownMethod(String),
    #[error("empty grid")]
    EmptyGrid,
}
