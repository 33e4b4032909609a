use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid regularization weights: {0}")]
    InvalidWeights(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("gradient Lipschitz constant is zero; the design matrix carries no signal")]
    ZeroLipschitz,

    #[error("solver diverged at iteration {iteration}: objective is not finite")]
    Divergence { iteration: usize },

    #[error("degenerate regression: {0}")]
    DegenerateRegression(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
