use autodiff::EngineError;
use thiserror::Error;

/// Errors from model construction, forward passes, and checkpoint I/O.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error(transparent)]
    Engine(#[from] EngineError),

    #[error("checkpoint I/O: {0}")]
    Io(#[from] std::io::Error),

    #[error("checkpoint has bad magic bytes")]
    BadMagic,

    #[error("checkpoint format version {found} unsupported (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("checkpoint truncated: {0}")]
    Truncated(String),

    #[error("checkpoint checksum mismatch: stored {stored}, computed {computed}")]
    Checksum { stored: u64, computed: u64 },

    #[error("checkpoint format: {0}")]
    Format(String),
}
