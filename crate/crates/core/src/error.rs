use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// The caller handed in something outside an operation's domain.
    #[error("rejected input: {0}")]
    Rejected(String),
    /// An internal consistency check failed; for validated inputs this is a bug.
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn rejected<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Rejected(msg.into()))
}

pub(crate) fn invariant<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invariant(msg.into()))
}
