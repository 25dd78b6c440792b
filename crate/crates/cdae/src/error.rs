use thiserror::Error;

#[derive(Debug, Error)]
pub enum CdaeError {
    #[error(transparent)]
    Nn(#[from] qmf_nn::NnError),
    #[error(transparent)]
    Core(#[from] qmf_core::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("mismatch: {0}")]
    Mismatch(String),
    #[error("malformed checkpoint: {0}")]
    Format(String),
    #[error("non-finite loss {loss} at epoch {epoch}, batch {batch}")]
    NonFinite { epoch: usize, batch: usize, loss: f64 },
}

pub type Result<T> = std::result::Result<T, CdaeError>;
