use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("outside the domain of validity: {0}")]
    Domain(String),

    #[error("failed to converge: {0}")]
    Convergence(String),

    #[error("dynamically unstable expansion point: {0}")]
    Instability(String),

    #[error("critical point: {0}")]
    CriticalPoint(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("power-law fit rejected: {0}")]
    FitRejected(String),
}

pub type Result<T> = std::result::Result<T, Error>;
