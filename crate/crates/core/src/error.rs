use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A network or run configuration violates one of its invariants.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid connection pattern: {0}")]
    Pattern(String),

    #[error("invalid clash-free spec: {0}")]
    Spec(String),

    /// A numeric computation produced NaN or infinity.
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("parse error at offset {offset}: {msg}")]
    Parse { offset: u64, msg: String },

    #[error("memory clash: {0}")]
    Clash(String),

    #[error("bank overflow: {0}")]
    BankOverflow(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(offset: u64, msg: impl Into<String>) -> Self {
        Error::Parse {
            offset,
            msg: msg.into(),
        }
    }
}
