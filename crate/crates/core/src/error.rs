use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("chart coordinate is degenerate: {0}")]
    Degenerate(String),
    #[error("covector is not on the unit cotangent fiber (H = {0})")]
    Normalization(f64),
    #[error("base point is singular: {0}")]
    SingularBase(String),
    #[error("integrator step size underflow at t = {0}")]
    StepUnderflow(f64),
    #[error("root finding failed: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
