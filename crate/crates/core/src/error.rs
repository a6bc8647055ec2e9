use thiserror::Error;

/// Errors raised by the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: expected {expected} components, found {found}")]
    DimensionMismatch { line: usize, expected: usize, found: usize },

    #[error("duplicate token `{0}`")]
    DuplicateToken(String),

    #[error("invalid token `{0}`: tokens must be non-empty and contain no whitespace")]
    InvalidToken(String),

    /// Every token that failed to resolve, in request order.
    #[error("unknown tokens: {}", .0.join(", "))]
    UnknownTokens(Vec<String>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("direction is not unit length (norm {norm})")]
    NonUnitDirection { norm: f64 },

    #[error("solver did not converge within {iterations} iterations")]
    NotConverged { iterations: usize },

    #[error("objective returned a non-finite value at {at}")]
    NonFinite { at: f64 },

    #[error("invalid job: {0}")]
    InvalidJob(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
