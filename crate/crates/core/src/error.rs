use thiserror::Error;

/// Failure modes shared by every engine in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The input lies outside the domain of the requested operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An exact 128-bit computation would have wrapped.
    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),

    /// A table allocation would exceed the configured memory cap.
    #[error("resource limit: {what} needs {requested_mb} MiB but the cap is {cap_mb} MiB")]
    Resource {
        what: &'static str,
        requested_mb: u64,
        cap_mb: u64,
    },

    /// Two routes that must agree did not.
    #[error("verification failed: {0}")]
    Verification(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
