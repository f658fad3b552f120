use thiserror::Error;

/// Errors raised by tape operations, the optimizer, and the gradient checker.
#[derive(Debug, Error)]
pub enum EngineError {
    /// Operand shapes are incompatible for the requested operation.
    #[error("dimension error in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },

    /// A row or element index is outside the tensor bounds.
    #[error("index error in {op}: index {index} out of range {bound}")]
    Index {
        op: &'static str,
        index: usize,
        bound: usize,
    },

    /// An operation contract was violated (e.g. backward from a non-scalar).
    #[error("contract error: {0}")]
    Contract(String),

    /// A non-finite value surfaced where the caller requires finite data.
    #[error("non-finite value in {context}: element {index}")]
    NonFinite { context: String, index: usize },
}

impl EngineError {
    pub(crate) fn dim(op: &'static str, detail: impl Into<String>) -> Self {
        EngineError::Dimension {
            op,
            detail: detail.into(),
        }
    }
}
