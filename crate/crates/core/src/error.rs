use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}:{line}: {message}")]
    Parse {
        context: String,
        line: usize,
        message: String,
    },

    #[error("no usable records in {0}")]
    EmptyCorpus(String),

    #[error("unmapped category prefixes: {}", .0.join(", "))]
    UnmappedPrefixes(Vec<String>),

    #[error("label {label:?} has only {count} record(s); stratification needs at least {needed}")]
    SmallStratum {
        label: String,
        count: usize,
        needed: usize,
    },

    #[error("duplicate id {0:?}")]
    DuplicateId(String),

    #[error("missing resource for enabled stage: {0}")]
    MissingResource(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("vocabulary is empty after pruning (min_df={min_df}, max_df={max_df})")]
    EmptyVocabulary { min_df: usize, max_df: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("malformed distribution: {0}")]
    InvalidDistribution(String),

    #[error("training data contains a single class")]
    SingleClass,

    #[error("training diverged at epoch {epoch} (non-finite loss); lower the learning rate")]
    Diverged { epoch: usize },

    #[error("negative feature value {value} at index {index}; multinomial naive Bayes needs non-negative features")]
    NegativeFeature { index: usize, value: f64 },

    #[error("feature space mismatch: model built for {expected}, got {found}")]
    FingerprintMismatch { expected: String, found: String },

    #[error("zero vector for {0}; similarity is undefined")]
    ZeroVector(String),

    #[error("query has no in-vocabulary terms after preprocessing")]
    EmptyQuery,

    #[error("unknown article id {0:?}")]
    UnknownId(String),

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("none of the history ids are in the index")]
    EmptyHistory,

    #[error("archive error: {0}")]
    Archive(String),

    #[error("archive checksum mismatch in section {0:?}")]
    Checksum(String),

    #[error("archive schema version {found} is not supported (this build reads up to {supported})")]
    Version { found: u32, supported: u32 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input or configuration rather than a
    /// failure while running a valid job. The CLI maps these to exit code 1.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Parse { .. }
                | Error::UnmappedPrefixes(_)
                | Error::MissingResource(_)
                | Error::InvalidParameter(_)
                | Error::InvalidConfig(_)
                | Error::FingerprintMismatch { .. }
                | Error::EmptyQuery
                | Error::UnknownId(_)
                | Error::UnknownLabel(_)
                | Error::EmptyHistory
                | Error::Version { .. }
                | Error::Checksum(_)
                | Error::Archive(_)
        )
    }
}
