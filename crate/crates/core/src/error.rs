use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator is singular or ill-conditioned (condition estimate {condition:e})")]
    SingularOperator { condition: f64 },

    #[error("quadrature did not converge: estimate {estimate}, error bound {error_bound:e}")]
    QuadratureFailure { estimate: f64, error_bound: f64 },

    #[error("integration failed at t = {t} (step size {step:e}): {reason}")]
    IntegrationFailure { t: f64, step: f64, reason: String },

    #[error("domain violation at t = {t}: value {value} outside [{lo}, {hi}]")]
    DomainViolation { t: f64, value: f64, lo: f64, hi: f64 },

    #[error("refinement did not stabilise: last iterates {previous} and {last}")]
    RefinementNotConverged { previous: f64, last: f64 },

    #[error("polynomial approximation failed at degree {degree}: achieved sup error {achieved}")]
    ApproximationFailure { degree: usize, achieved: f64 },

    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("expression error: {0}")]
    Expression(String),
}
