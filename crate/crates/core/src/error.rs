use thiserror::Error;

/// Errors raised by model construction, analytics and simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("scenario out of range: origin {origin} + depth {depth} exceeds radius {radius}")]
    OutOfRange {
        origin: usize,
        depth: usize,
        radius: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error("internal consistency failure: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;
