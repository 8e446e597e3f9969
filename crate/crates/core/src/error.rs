use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of a function.
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    /// A result cannot be represented in f64.
    #[error("range error in {func}: {detail}")]
    Range { func: &'static str, detail: String },

    /// An iterative kernel did not converge within its term budget.
    #[error("{func} did not converge after {iterations} iterations")]
    NoConvergence {
        func: &'static str,
        iterations: usize,
    },

    /// Array dimensions disagree with the scenario.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The Doppler steering matrix of a receiver (0-based `rx`) is numerically
    /// rank deficient.
    #[error("Doppler steering matrix of RX {} is rank deficient (reciprocal condition {rcond:.3e})", .rx + 1)]
    Conditioning { rx: usize, rcond: f64 },

    /// A scenario, error set or experiment violates its invariants.
    #[error("invalid {what}: {detail}")]
    Invalid { what: &'static str, detail: String },

    /// A required argument is missing or inconsistent.
    #[error("argument error: {0}")]
    Argument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        func,
        detail: detail.into(),
    }
}

pub(crate) fn invalid(what: &'static str, detail: impl Into<String>) -> Error {
    Error::Invalid {
        what,
        detail: detail.into(),
    }
}
