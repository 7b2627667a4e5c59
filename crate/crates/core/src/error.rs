use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Arguments outside the operation's domain.
    #[error("{op}: domain error: {msg}")]
    Domain { op: &'static str, msg: String },
    /// A numerical routine failed to converge or produced a non-finite value.
    #[error("{op}: numeric error: {msg}")]
    Numeric { op: &'static str, msg: String },
    /// The sampler could not start or finish a chain.
    #[error("sampler: {0}")]
    Sampler(String),
}

impl Error {
    pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain { op, msg: msg.into() }
    }

    pub(crate) fn numeric(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Numeric { op, msg: msg.into() }
    }

    pub fn is_domain(&self) -> bool {
        matches!(self, Error::Domain { .. })
    }
}

/// Checks `cond`, returning a domain error built from `msg` otherwise.
pub(crate) fn ensure(cond: bool, op: &'static str, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::domain(op, msg()))
    }
}
