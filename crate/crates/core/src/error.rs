use thiserror::Error;

/// Errors raised by the linear algebra, sampling, detection and experiment layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("vector has zero norm")]
    ZeroVector,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("scalar minimization did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("insufficient trials: {0}")]
    InsufficientTrials(String),
    #[error("trial {index}: {source}")]
    Trial {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("worker pool: {0}")]
    ThreadPool(String),
}

pub type Result<T> = std::result::Result<T, Error>;
