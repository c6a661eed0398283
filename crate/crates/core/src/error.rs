use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("optimal contract violates monotonicity between types {lower} and {upper}")]
    MonotonicityViolation { lower: usize, upper: usize },

    #[error("bracket expansion exceeded {0} doublings")]
    BracketExpansion(usize),

    #[error("brute-force oracle refuses K = {k_types} (limit {limit})")]
    OracleTooLarge { k_types: usize, limit: usize },

    #[error("sweep failed at gamma = {gamma}: {source}")]
    Sweep {
        gamma: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, actual })
    }
}
