use thiserror::Error;

/// Errors raised by the operator-algebra and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index {0} is outside the domain of a sequence on the nonnegative integers")]
    NegativeIndex(i64),

    #[error("weight is not strictly positive at k = {k}")]
    NotPositive { k: usize },

    #[error("series diverges: {0}")]
    Divergent(String),

    #[error("singular symbol: {what} vanishes at k = {k}")]
    SingularSymbol { what: &'static str, k: usize },

    #[error("invalid power-law family (a, b, c) = ({a}, {b}, {c}): need 3 < a < 2b - 1 < c")]
    InvalidFamily { a: f64, b: f64, c: f64 },

    #[error("cannot bound the tail of a symbol without a declared limit")]
    CannotBound,

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("not representable: {0}")]
    NotRepresentable(String),
}

pub type Result<T> = std::result::Result<T, Error>;
