use thiserror::Error;

/// Errors raised by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("integrand is not finite ({value}) at node {node:?}")]
    NonFinite { node: Vec<f64>, value: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported order {order}: {reason}")]
    UnsupportedOrder { order: usize, reason: &'static str },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("construction error: {0}")]
    Construction(String),

    #[error("sampler degenerate: acceptance rate {0:.3e} is below 1e-3")]
    SamplerDegenerate(f64),

    #[error("regime error: {0}")]
    Regime(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
