use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A corpus record failed validation.
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },

    #[error("corpus error: {0}")]
    Corpus(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid general identification number {0:?}: expected 19 decimal digits")]
    Gin(String),

    #[error("label {0:?} is not in the class catalog")]
    UnknownLabel(String),

    #[error("class index {index} out of range 1..={max}")]
    ClassIndex { index: usize, max: usize },

    #[error("empty vocabulary: no n-gram satisfies the document-frequency bounds")]
    EmptyVocabulary,

    #[error("undefined statistic: {0}")]
    Undefined(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("malformed tree: {0}")]
    MalformedTree(String),

    #[error("missing feature column {0:?}")]
    MissingColumn(String),

    #[error("template field {0:?} is missing")]
    Template(String),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
