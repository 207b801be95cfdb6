use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the loading, feature and training pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("split error: {0}")]
    Split(String),

    #[error("fold error: {0}")]
    Fold(String),

    #[error("vocabulary error: {0}")]
    Vocabulary(String),

    #[error("idf fit error: {0}")]
    Fit(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("metric error: {0}")]
    Metric(String),

    #[error("model format version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("model file error: {0}")]
    ModelFormat(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
