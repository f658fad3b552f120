use thiserror::Error;

/// Errors from encoding, file parsing, and synthetic generation.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("encoding error at position {position}: unexpected character {character:?}")]
    Encoding { position: usize, character: char },

    #[error("parse error at {file} line {line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    #[error("invalid specification: {0}")]
    Spec(String),

    #[error("generation error: {0}")]
    Generation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Engine(#[from] autodiff::EngineError),
}
