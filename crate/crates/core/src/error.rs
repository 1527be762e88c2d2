use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A search target cannot be met (for example a tail integral that never
    /// falls below the requested level).
    #[error("unreachable: {0}")]
    Unreachable(String),

    /// An exhaustive computation would exceed its size budget.
    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("cannot fit: {0}")]
    Fit(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
