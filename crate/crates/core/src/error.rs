use thiserror::Error;

/// Errors raised anywhere in the aggregation engine.
#[derive(Debug, Error)]
pub enum TalcError {
    #[error("invalid label space: {0}")]
    LabelSpace(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },

    #[error("class index out of range: {value} (k = {k})")]
    ClassOutOfRange { value: i64, k: usize },

    #[error("empty matrix")]
    EmptyMatrix,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("empty adaptation set: floor({alpha} * {n}) = 0")]
    EmptyAdaptationSet { alpha: f64, n: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("labeling matrix contains no non-abstain cell")]
    AllAbstain,

    #[error("non-finite log-likelihood at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("missing {key} metadata for explanation `{id}`")]
    MissingMetadata { key: &'static str, id: String },

    #[error("id mismatch: {0}")]
    IdMismatch(String),

    #[error("instance too large for enumeration: {0} configurations")]
    TooLarge(f64),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl TalcError {
    /// Numeric failures, as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, TalcError::NonFinite { .. })
    }
}

pub type Result<T, E = TalcError> = std::result::Result<T, E>;
