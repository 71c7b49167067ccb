use std::path::PathBuf;

use thiserror::Error;

use crate::classifiers::FeatureContract;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("configuration error: column `{0}` not found in header")]
    MissingColumn(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("empty corpus: {0}")]
    EmptyCorpus(String),

    #[error("duplicate document id `{0}`")]
    DuplicateId(String),

    #[error("malformed {what} at line {line}: {reason}")]
    Format {
        what: &'static str,
        line: usize,
        reason: String,
    },

    #[error("token `{0}` not found in embedding table")]
    TokenNotFound(String),

    #[error("corpus too small for embedding training: {retained} token(s) meet min_count, need at least 2")]
    CorpusTooSmall { retained: usize },

    #[error("class `{class}` has {count} sample(s); SMOTE needs at least 2 per class")]
    UnsatisfiableNeighbors { class: String, count: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("negative feature value {value} at row {row}; multinomial naive bayes needs nonnegative features")]
    NegativeFeature { row: usize, value: f64 },

    #[error("feature contract mismatch: model expects {expected:?} input, got {got:?}")]
    ContractMismatch {
        expected: FeatureContract,
        got: FeatureContract,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid pipeline: {0}")]
    InvalidPipeline(String),

    #[error("fold {fold} failed: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },
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
