use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not converge: estimated error {error:e} exceeds tolerance {tolerance:e}")]
    Quadrature { error: f64, tolerance: f64 },

    #[error("exact oracle budget exceeded: {0}")]
    Budget(String),

    #[error("power iteration did not converge after {iterations} iterations (L1 residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("comparison graph is not rho-constrained: tau1 = {tau1} exceeds rho = {rho}")]
    NotConstrained { tau1: f64, rho: f64 },

    #[error("comparison graph is disconnected, so the stationary distribution is not unique")]
    Disconnected,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
