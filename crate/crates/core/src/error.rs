use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the toolkit.
///
/// Messages are stable; the service layer forwards them verbatim to clients.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty corpus")]
    EmptyCorpus,

    #[error("duplicate document id {0:?}")]
    DuplicateDocument(String),

    #[error("isolated word column: {0:?}")]
    IsolatedWordColumn(String),

    #[error("degenerate score table")]
    DegenerateScoreTable,

    #[error("asymmetric similarity matrix (max deviation {0:e})")]
    AsymmetricSimilarity(f64),

    #[error("T not PSD (quadratic form {0:e})")]
    NotPsd(f64),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid geometry spec: {0}")]
    InvalidSpec(String),

    #[error("no common subsumer for {0:?} and {1:?}")]
    NoCommonSubsumer(String, String),

    #[error("zero probability for concept {0:?}")]
    ZeroProbability(String),

    #[error("invalid taxonomy: {0}")]
    InvalidTaxonomy(String),

    #[error("no n-gram contains a vocabulary word")]
    EmptyNgramTable,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("divergence; reduce learning rate")]
    Divergence,

    #[error("computation cancelled by a newer revision")]
    Cancelled,

    #[error("degenerate centroids")]
    DegenerateCentroids,

    #[error("degenerate projection")]
    DegenerateProjection,

    #[error("{0}")]
    Measure(String),

    #[error("parse error in {path}: line {line}: {message}")]
    Parse { path: String, line: usize, message: String },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Wraps the error with the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
