use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabelerError {
    #[error(transparent)]
    Core(#[from] talc_core::TalcError),
    #[error("invalid labeler configuration: {0}")]
    Config(String),
    #[error("task has no example records to prompt with")]
    MissingExamples,
    #[error("environment variable `{0}` holding the auth token is not set")]
    MissingToken(String),
    #[error("request failed: {0}")]
    Request(String),
    #[error("malformed endpoint reply: {0}")]
    MalformedReply(String),
    #[error("no cached completion and the network is disabled")]
    CacheMiss,
    #[error("cache I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("cache entry: {0}")]
    Json(#[from] serde_json::Error),
}

impl LabelerError {
    /// Errors worth retrying: the request may succeed if sent again.
    pub fn is_transient(&self) -> bool {
        matches!(self, LabelerError::Request(_))
    }
}

pub type Result<T, E = LabelerError> = std::result::Result<T, E>;
