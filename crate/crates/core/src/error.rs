use thiserror::Error;

/// Errors raised by the library. Variants map onto CLI exit codes:
/// [`Error::Capacity`] is the only one reported as a capacity failure.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("qubit index {index} out of range for {n} qubits")]
    OutOfRange { index: usize, n: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible matching: {0}")]
    Infeasible(String),

    #[error("capacity exceeded: {what} needs 2^{needed_log2} terms, maximum is 2^{max_log2}")]
    Capacity {
        what: String,
        needed_log2: u32,
        max_log2: u32,
    },

    #[error("channel is not invertible: transfer eigenvalue {index} is {value:e}")]
    NonInvertible { index: usize, value: f64 },

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, actual })
    }
}
