use thiserror::Error;

use crate::conditions::ConditionId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseRationalError {
    #[error("empty rational")]
    Empty,
    #[error("malformed rational {0:?}")]
    Malformed(String),
    #[error("division by zero")]
    DivisionByZero,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Rational(#[from] ParseRationalError),

    #[error("matrix shape: {0}")]
    MatrixShape(String),

    #[error("matrix entry {index}: {source}")]
    MatrixEntry {
        index: usize,
        source: ParseRationalError,
    },

    #[error("invalid dimension {0}: expected n >= 1")]
    InvalidDim(u32),

    #[error("dimension {n} unsupported here (need {need})")]
    UnsupportedDimension { n: u32, need: &'static str },

    #[error("precondition failed: conditions {0:?} are violated")]
    Violated(Vec<ConditionId>),

    #[error("matrix is not of type II (b0 < 0 < b1, b2)")]
    NotTypeII,

    #[error("no condition is violated")]
    NoViolation,

    #[error("family {0} does not exist (expected 1..=9)")]
    UnknownFamily(u8),

    #[error("points do not sum to zero (relative defect {0:e})")]
    ConstraintViolated(f64),

    #[error("divergent sum: {0}")]
    Divergent(String),

    #[error("empty support: {0}")]
    EmptySupport(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
