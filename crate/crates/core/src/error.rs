use alloc::string::String;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{what} {value} out of range (max {max})")]
    OutOfRange {
        what: &'static str,
        value: usize,
        max: usize,
    },
    #[error("invalid vertex {0}")]
    InvalidVertex(String),
    #[error("invalid tree shape: {0}")]
    InvalidShape(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("element cap {cap} exceeded (reached {reached})")]
    Capacity { reached: u128, cap: u64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),
}

/// A DSL error with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            column,
            message: message.into(),
        }
    }
}
