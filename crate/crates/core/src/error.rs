use thiserror::Error;

/// Errors raised by the library. Every operation either returns a value or one of these.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("resource cap exceeded: {what} needs {needed}, cap is {cap}")]
    Resource {
        what: &'static str,
        needed: u128,
        cap: u128,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("combinatorial dimension undefined: the hyperplane contains no sign vector")]
    UndefinedDimension,

    #[error("membership error: {0}")]
    Membership(String),

    #[error("{0} is not an odd prime")]
    NotPrime(u64),
}

impl Error {
    pub(crate) fn resource(what: &'static str, needed: u128, cap: u128) -> Self {
        Error::Resource { what, needed, cap }
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub fn is_resource(&self) -> bool {
        matches!(self, Error::Resource { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
