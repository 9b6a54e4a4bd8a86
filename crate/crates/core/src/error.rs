use thiserror::Error;

/// Errors raised by the geometry kernels, the estimator and the Monte-Carlo harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("matrix is not positive definite (smallest eigenvalue {min_eig:e})")]
    NotPositiveDefinite { min_eig: f64 },

    #[error("matrix is ill-conditioned (smallest eigenvalue {min_eig:e} below floor)")]
    IllConditioned { min_eig: f64 },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("iteration diverged at step {step}: {source}")]
    Diverged {
        step: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{failed} of {runs} Monte-Carlo runs failed (limit is 5%)")]
    TooManyFailures { failed: usize, runs: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
