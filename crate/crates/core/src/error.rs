use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by the simulation core.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    Domain(String),
    /// A state or parameter violates a type invariant.
    InvalidState(String),
    /// An operation was called in a configuration it does not support.
    Misuse(String),
    /// The adaptive integrator could not make progress.
    IntegrationFailure { reached_t: f64, reason: String },
    /// The propagated state drifted beyond the repair tolerance.
    Integrity { t: f64, detail: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidState(msg.into())
    }

    pub(crate) fn misuse(msg: impl Into<String>) -> Self {
        Error::Misuse(msg.into())
    }

    /// Time reached before an integration or integrity failure, if any.
    pub fn reached_time(&self) -> Option<f64> {
        match self {
            Error::IntegrationFailure { reached_t, .. } => Some(*reached_t),
            Error::Integrity { t, .. } => Some(*t),
            _ => None,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::InvalidState(msg) => write!(f, "invariant violation: {msg}"),
            Error::Misuse(msg) => write!(f, "misuse: {msg}"),
            Error::IntegrationFailure { reached_t, reason } => {
                write!(f, "integration failed at t = {reached_t}: {reason}")
            }
            Error::Integrity { t, detail } => write!(f, "state integrity lost at t = {t}: {detail}"),
        }
    }
}

impl core::error::Error for Error {}
