use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied an argument outside the documented domain.
    #[error("invalid input: {0}")]
    Input(String),
    /// An intensity model violated its own declared bounds or assumptions.
    #[error("model error: {0}")]
    Model(String),
    /// Fusion-side protocol violation (duplicate, missing or stale reports).
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("decode error: {0}")]
    Decode(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn model(msg: impl Into<String>) -> Self {
        Error::Model(msg.into())
    }

    pub(crate) fn protocol(msg: impl Into<String>) -> Self {
        Error::Protocol(msg.into())
    }
}
