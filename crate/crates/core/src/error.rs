use std::path::PathBuf;

use thiserror::Error;

/// Failures while decoding one of the binary containers (PCV1 / DPV1).
///
/// Every variant carries the byte offset at which decoding stopped.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("bad magic at offset 0: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: Vec<u8> },
    #[error("truncated payload at offset {offset}: need {needed} more bytes, {available} available")]
    Truncated {
        offset: usize,
        needed: u64,
        available: usize,
    },
    #[error("non-finite value at offset {offset}")]
    NonFinite { offset: usize },
    #[error("invalid {field} = {value} at offset {offset}")]
    InvalidHeader {
        field: &'static str,
        value: u64,
        offset: usize,
    },
    #[error("{reason} at offset {offset}")]
    Inconsistent { offset: usize, reason: &'static str },
    #[error("{extra} trailing bytes after payload at offset {offset}")]
    TrailingBytes { offset: usize, extra: usize },
}

/// Failures while decoding one of the text sidecars (labels, predictions).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum TextError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: class id {id} out of range for K={num_classes}")]
    OutOfRange {
        line: usize,
        id: u64,
        num_classes: usize,
    },
    #[error("row {row}: probabilities sum to {sum}, expected 1 within 1e-6")]
    RowSum { row: usize, sum: f64 },
    #[error("expected {expected} rows, found {found}")]
    RowCount { expected: usize, found: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Format {
        path: PathBuf,
        #[source]
        source: FormatError,
    },
    #[error("{path}: {source}")]
    Text {
        path: PathBuf,
        #[source]
        source: TextError,
    },
    #[error("invalid value: {0}")]
    Invalid(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("training failed: class {class} has no samples")]
    EmptyClass { class: usize },
    #[error("model file: {0}")]
    Model(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
