use thiserror::Error;

/// Malformed problem data. Solver outcomes (infeasible, iteration limit)
/// are reported through [`crate::Status`] instead.
#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("nonconvex data: {0}")]
    NotConvex(String),
    #[error("asymmetric matrix: {0}")]
    NotSymmetric(String),
}
