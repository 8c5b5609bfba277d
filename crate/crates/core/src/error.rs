use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("n-gram order must be >= 1")]
    ZeroNgramOrder,

    #[error("empty reference tokens")]
    EmptyReference,

    #[error("empty outline")]
    EmptyOutline,

    #[error("empty text")]
    EmptyText,

    #[error("smoothing epsilon must be > 0, got {0}")]
    NonPositiveEpsilon(f64),

    #[error("metric undefined: {0}")]
    MetricUndefined(String),

    #[error("embedding key not found: {0:?}")]
    MissingEmbeddingKey(String),

    #[error("embedding dimension mismatch: expected {expected}, got {got} for key {key:?}")]
    EmbeddingDimensionMismatch {
        key: String,
        expected: usize,
        got: usize,
    },

    #[error("embedding vector for {0:?} contains a non-finite entry")]
    NonFiniteEmbedding(String),

    #[error("invalid pattern {pattern:?}: {source}")]
    InvalidPattern {
        pattern: String,
        #[source]
        source: regex::Error,
    },

    #[error("{path}:{line}: {message}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("template {name} is missing required placeholder {{{placeholder}}}")]
    MissingPlaceholder { name: String, placeholder: String },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("outline parse failure: expected {expected} bullets, got {got}; raw response: {raw:?}")]
    OutlineParse {
        expected: usize,
        got: usize,
        raw: String,
    },

    #[error("transport error after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },

    #[error("no replay entry for request hash {0}")]
    ReplayMiss(String),

    #[error("segment {completed} of {total} failed for document {doc_id}: {source}")]
    PartialGeneration {
        doc_id: String,
        completed: usize,
        total: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("synthesis profile invalid: {0}")]
    InvalidProfile(String),

    #[error("report labels/reports length mismatch: {reports} reports vs {labels} labels")]
    LabelMismatch { reports: usize, labels: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
