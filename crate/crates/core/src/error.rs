use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("integration step rejected at t = {time}: {reason}")]
    StepRejected { time: f64, reason: String },

    #[error("degenerate sector for premise {}: min = max = {value}", premise + 1)]
    DegenerateSector { premise: usize, value: f64 },

    #[error("membership vector is not on the simplex (sum = {sum}, min = {min})")]
    SimplexViolation { sum: f64, min: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("malformed linear program: {0}")]
    MalformedLp(String),

    #[error("simplex iteration limit reached after {0} pivots")]
    IterationLimit(usize),

    #[error("eigenvalue computation failed: {0}")]
    Spectral(String),

    #[error("simulation diverged at t = {time}: {reason}")]
    Diverged { time: f64, reason: String },
}
