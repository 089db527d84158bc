use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by parsing, validation and metric evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("validation error in frame `{frame}`, field `{field}`: {message}")]
    Validation {
        frame: String,
        field: String,
        message: String,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("corrupt mask: run lengths sum to {sum}, expected {expected}")]
    CorruptMask { sum: u64, expected: u64 },

    #[error("shape mismatch: {left:?} vs {right:?}")]
    Shape {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("flow format error: {0}")]
    Format(String),

    #[error("flow payload truncated: expected {expected} bytes, found {found}")]
    Length { expected: usize, found: usize },

    #[error("empty geometry: {0}")]
    EmptyGeometry(&'static str),

    #[error("similarity undefined: ground truth has no visible joints")]
    UndefinedSimilarity,

    #[error("empty split: {0}")]
    EmptySplit(String),

    #[error("empty metric: {0}")]
    EmptyMetric(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("incomplete input: missing slot `{0}`")]
    IncompleteInput(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn validation(frame: impl Into<String>, field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            frame: frame.into(),
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 for semantic/validation failures, 2 for I/O and
    /// format failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Format(_) | Error::Length { .. } | Error::Io { .. } => 2,
            _ => 1,
        }
    }
}

/// Deserialize a JSON document. Syntax errors are parse errors; well-formed
/// documents with the wrong shape or values are invalid input.
pub fn from_json<T: serde::de::DeserializeOwned>(bytes: &[u8]) -> Result<T> {
    serde_json::from_slice(bytes).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => Error::Invalid(e.to_string()),
        _ => Error::Parse {
            offset: byte_offset(bytes, e.line(), e.column()),
            message: e.to_string(),
        },
    })
}

pub(crate) fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = bytes.split(|&b| b == b'\n').take(line - 1).map(|l| l.len() + 1).sum();
    (line_start + column.saturating_sub(1)).min(bytes.len())
}
