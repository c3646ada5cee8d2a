use thiserror::Error;

/// Errors produced across the crate.
///
/// Validation-style operations (`validate_timeline`, `validate_annotation`)
/// do not return errors; they collect violations and report them all. The
/// variants here cover hard failures: bad parameters, shape mismatches,
/// malformed files, and external-service trouble.
#[derive(Debug, Error)]
pub enum Error {
    /// Input failed a structural precondition. Carries every violation found.
    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    /// A scalar parameter is out of its legal range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Matrix/vector dimensions do not line up.
    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: String, actual: String },

    /// Training loss left the finite range.
    #[error("numeric divergence: {0}")]
    Divergence(String),

    /// The summarization service failed after retries.
    #[error("service error (request {request_id}): {message}")]
    Service { request_id: String, message: String },

    /// A data file could not be parsed.
    #[error("malformed input {path}: {message}")]
    Malformed { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(vec![msg.into()])
    }

    pub fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    /// Process exit code the CLI maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Service { .. } => 3,
            Error::Divergence(_) => 4,
            _ => 2,
        }
    }
}
