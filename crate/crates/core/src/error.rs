use std::path::PathBuf;

use thiserror::Error;

/// Operand dimensions disagree with each other or with an architecture.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("dimension error: {0}")]
pub struct ShapeError(pub String);

impl ShapeError {
    pub fn new(msg: String) -> Self {
        Self(msg)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrainError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("training diverged at epoch {epoch}: non-finite loss")]
    Diverged { epoch: usize },
    #[error("empty {0} set")]
    EmptySet(&'static str),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("invalid training configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("score undefined: {0}")]
    Undefined(&'static str),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot open {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("row {row}: expected {expected} fields, found {found}")]
    Ragged { row: usize, expected: usize, found: usize },
    #[error("row {row}, column '{column}': cannot parse '{value}' as a number")]
    NotNumeric { row: usize, column: String, value: String },
    #[error("missing column '{0}'")]
    MissingColumn(String),
    #[error("duplicate header name '{0}'")]
    DuplicateHeader(String),
    #[error("unknown class label '{label}' at row {row}")]
    UnknownLabel { row: usize, label: String },
    #[error("csv: {0}")]
    Csv(String),
    #[error("dataset too small: {0}")]
    TooSmall(String),
    #[error("class {class} has {count} samples; stratified splitting needs at least 3")]
    SparseClass { class: usize, count: usize },
    #[error("invalid dataset: {0}")]
    Invalid(String),
}
