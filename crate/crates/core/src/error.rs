//! Error types shared across the pipeline.

use thiserror::Error;

/// Errors from dataset loading, validation and synthesis.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: parse error: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },
    #[error("{path}:{line}: unknown interaction_type `{token}`")]
    UnknownInteractionType {
        path: String,
        line: u64,
        token: String,
    },
    #[error("{path}:{line}: {message}")]
    InvalidValue {
        path: String,
        line: u64,
        message: String,
    },
    #[error("event references unknown post `{post_id}` (user `{user_id}`)")]
    DanglingPost { user_id: String, post_id: String },
    #[error("event references unknown user `{user_id}` (post `{post_id}`)")]
    DanglingUser { user_id: String, post_id: String },
    #[error("duplicate post_id `{0}`")]
    DuplicatePost(String),
    #[error("invalid synthetic scale: {0}")]
    InvalidScale(String),
}

/// Errors from feedback scoring and rating-matrix assembly.
#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("interaction type `{0}` has no weight-table entry")]
    UnknownType(String),
    #[error("invalid weight table: {0}")]
    BadWeightTable(String),
    #[error("invalid normalization spec: {0}")]
    BadNormalization(String),
    #[error("invalid rating matrix: {0}")]
    BadMatrix(String),
    #[error("empty rating matrix: no (user, post) pair has a nonzero feedback score")]
    EmptyMatrix,
}

/// Errors from similarity-matrix construction and serialization.
#[derive(Debug, Error)]
pub enum SimilarityError {
    #[error("top_k must be at least 1")]
    ZeroTopK,
    #[error("invalid similarity matrix: {0}")]
    Invalid(String),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Errors from model training, prediction and persistence.
#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid hyperparameters: {0}")]
    BadHyperparams(String),
    #[error("rating matrix is empty")]
    EmptyRatings,
    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("dimension mismatch: {0}")]
    ShapeMismatch(String),
    #[error("similarity matrix items do not align with rating matrix items: {0}")]
    Misaligned(String),
    #[error("similarity matrix required when alpha > 0")]
    MissingSimilarity,
    #[error("training diverged at epoch {epoch}: loss not finite after {halvings} step halvings")]
    Diverged { epoch: usize, halvings: usize },
    #[error("model file: {0}")]
    ModelFile(String),
}

/// Errors from splitting and metric computation.
#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid evaluation config: {0}")]
    BadConfig(String),
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    #[error("grid cell ({selector}, {model}) failed: {source}")]
    Cell {
        selector: String,
        model: String,
        #[source]
        source: Box<Error>,
    },
}

/// Errors from config and weight-table files.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },
    #[error("{path}:{line}: unknown category `{token}` (expected direct, social or reading)")]
    UnknownCategory {
        path: String,
        line: u64,
        token: String,
    },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {message}")]
    BadValue { key: String, message: String },
}

/// Top-level error for callers that drive the whole pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

impl Error {
    /// True for numeric failures (divergence), as opposed to input or
    /// validation problems.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::Train(TrainError::Diverged { .. }) => true,
            Error::Eval(EvalError::Cell { source, .. }) => source.is_numeric(),
            _ => false,
        }
    }
}
