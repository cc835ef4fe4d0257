use thiserror::Error;

#[derive(Debug, Error)]
pub enum PhidError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("numerical failure in {what}: {detail}")]
    Numeric { what: String, detail: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("precondition failed: {msg} ({} violating nodes)", nodes.len())]
    Precondition { msg: String, nodes: Vec<usize> },
    #[error("internal consistency violated: {0}")]
    Consistency(String),
    #[error("cache rejected: {0}")]
    Cache(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, PhidError>;

pub(crate) fn numeric(what: &str, detail: impl Into<String>) -> PhidError {
    PhidError::Numeric { what: what.to_string(), detail: detail.into() }
}
