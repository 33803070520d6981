use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("network generation failed: {0}")]
    Generation(String),
    #[error("no convergence after {iters} iterations (residual {residual:.3e})")]
    NoConvergence { iters: usize, residual: f64 },
    #[error("standing assumption violated: {0}")]
    Assumption(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("ensemble failed: {0}")]
    Ensemble(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerics or of a model assumption, as
    /// opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Generation(_)
                | Error::NoConvergence { .. }
                | Error::Assumption(_)
                | Error::Domain(_)
                | Error::Ensemble(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
