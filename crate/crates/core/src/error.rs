use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// Transport or availability failure at the embedding boundary. Retryable.
    #[error("embedding provider unavailable: {0}")]
    ProviderUnavailable(String),

    #[error("text not present in vector store: {0:?}")]
    UnknownText(String),

    /// Transport or protocol failure talking to an LLM endpoint. Retryable.
    #[error("llm client error: {0}")]
    Llm(String),

    #[error("no recorded reply for key {key} sample {sample}")]
    ReplayMiss { key: String, sample: usize },

    #[error("judge failed on pair ({a:?}, {b:?}) after {attempts} attempts: {message}")]
    JudgeFailed {
        a: String,
        b: String,
        attempts: usize,
        message: String,
    },

    #[error("unknown {kind} {name:?} (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Whether retrying the same call may succeed.
    pub fn is_retryable(&self) -> bool {
        matches!(self, Error::ProviderUnavailable(_) | Error::Llm(_))
    }

    pub fn is_provider_failure(&self) -> bool {
        matches!(
            self,
            Error::ProviderUnavailable(_) | Error::UnknownText(_) | Error::DimensionMismatch { .. }
        )
    }
}
