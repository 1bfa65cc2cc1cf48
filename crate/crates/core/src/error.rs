use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index {index} out of range (limit {limit})")]
    Index { index: usize, limit: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operator is not hermitian (max |A - A^dag| = {defect:.3e})")]
    NonHermitian { defect: f64 },

    #[error("eigensolver did not converge after {iterations} iterations (best residual {best_residual:.3e})")]
    NoConvergence { iterations: usize, best_residual: f64 },

    #[error("cutoff not converged: {0}")]
    Cutoff(String),

    #[error("matrix is singular or ill-conditioned (condition number {condition:.3e})")]
    Singular { condition: f64 },

    #[error("resource budget exceeded: need {required_bytes} bytes, budget {budget_bytes} bytes ({budget_source})")]
    Resource {
        required_bytes: u64,
        budget_bytes: u64,
        budget_source: String,
    },

    #[error("non-physical density matrix: {0}")]
    NonPhysical(String),

    #[error("division by zero: {0}")]
    Division(String),

    #[error("unstable normal mode: omega_minus^2 = {omega_minus_sq:.6e}")]
    Instability { omega_minus_sq: f64 },
}
