use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("backend mismatch: {0}")]
    BackendMismatch(String),

    #[error("newick syntax error at byte {position}: {message}")]
    Newick { position: usize, message: String },

    #[error("taxa mismatch: {0}")]
    TaxaMismatch(String),

    #[error("tree space with {leaves} leaves exceeds the exhaustive geodesic limit of {limit}")]
    LeafGuard { leaves: usize, limit: usize },

    #[error("malformed document: {0}")]
    Document(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
