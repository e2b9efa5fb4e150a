use serde::Serialize;

pub type ServiceResult<T> = Result<T, ServiceError>;

/// A problem with one request field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("service not ready: no trained model")]
    NotReady,

    #[error("invalid request: {}", describe(.0))]
    Validation(Vec<FieldError>),

    /// The sample log could not be written; nothing was stored and the
    /// request may be retried.
    #[error("sample store write failed (retryable): {0}")]
    StoreWrite(std::io::Error),

    #[error("every grid candidate failed to train; keeping the current model")]
    AllCandidatesFailed,

    #[error("not enough data to train: {0}")]
    InsufficientData(String),

    #[error("model record: {0}")]
    Record(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] accu_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ServiceError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, ServiceError::StoreWrite(_))
    }
}

fn describe(errors: &[FieldError]) -> String {
    errors.iter().map(|e| format!("{}: {}", e.field, e.message)).collect::<Vec<_>>().join("; ")
}
