use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty batch")]
    EmptyBatch,

    #[error("{what} did not converge within {iterations} iterations")]
    NotConverged { what: &'static str, iterations: usize },

    #[error("could not bracket the root of the scaled operator at y = {0}")]
    BracketFailure(f64),

    #[error("shrinkage function is not firmly nonexpansive: {0}")]
    NotFirmlyNonexpansive(String),

    #[error("training diverged at iteration {iteration}: loss {loss:e} exceeds {limit:e}")]
    Diverged {
        iteration: usize,
        loss: f64,
        limit: f64,
    },

    #[error("SNR improvement is undefined when the observation equals the clean signal")]
    UndefinedSnr,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
