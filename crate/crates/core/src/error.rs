use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid operator system: {0}")]
    InvalidSystem(String),
    #[error("invalid seminorm: {0}")]
    InvalidSeminorm(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("line search exceeded {0} iterations")]
    LineSearch(usize),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
