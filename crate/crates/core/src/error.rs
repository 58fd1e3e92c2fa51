use thiserror::Error;

/// Errors raised by the projection engine and its validators.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("size limit exceeded: {what} = {value} (maximum {max})")]
    Size {
        what: &'static str,
        value: usize,
        max: usize,
    },

    #[error("Bethe solver did not converge after {iterations} Newton steps at c = {coupling} (residual {residual:e})")]
    SolverFailure {
        coupling: f64,
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("quadrature did not reach tolerance {tolerance:e} (estimated error {estimate:e})")]
    Accuracy { tolerance: f64, estimate: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
