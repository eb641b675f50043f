//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("division by zero")]
    DivideByZero,
    #[error("singular matrix")]
    SingularMatrix,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid security level X={x}: require 0 <= X < read threshold {read_threshold}")]
    InvalidSecurity { x: usize, read_threshold: usize },
    #[error("too many dropouts: |D|={got} exceeds N - R_r = {max}")]
    TooManyDropouts { got: usize, max: usize },
    #[error("update threshold violated: {available} available servers < required {required}")]
    ThresholdViolated { available: usize, required: usize },
    #[error("field too small: q={q} but the code needs q >= {needed}")]
    FieldTooSmall { q: u64, needed: u64 },
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("scenario invalid at event {event}: {reason}")]
    ScenarioInvalid { event: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
