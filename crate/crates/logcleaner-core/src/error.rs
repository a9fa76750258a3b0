//! Error type shared across the crate.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: expected `#logcleaner-{kind} v{expected}` header, found `{found}`")]
    Version {
        path: PathBuf,
        kind: &'static str,
        expected: u32,
        found: String,
    },

    #[error("{path}: content hash mismatch (expected {expected}, computed {computed})")]
    HashMismatch {
        path: PathBuf,
        expected: String,
        computed: String,
    },

    #[error("duplicate session key `{0}` in label table")]
    DuplicateSessionKey(String),

    #[error("unknown label string `{0}` (expected Normal or Anomaly)")]
    UnknownLabel(String),

    #[error("unknown event id `{0}`")]
    UnknownEvent(String),

    #[error("supervised training needs at least one {missing} example in the train slice")]
    SingleClass { missing: &'static str },

    #[error("feature width mismatch: model was trained on {expected} columns, input has {got}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("prediction/truth length mismatch: {predicted} vs {truth}")]
    LengthMismatch { predicted: usize, truth: usize },

    #[error("invalid parameter {name}: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("external detector `{command}` failed: {message}")]
    External { command: String, message: String },

    #[error("{0}")]
    InvalidInput(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
