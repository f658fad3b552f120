//! Minimal reverse-mode automatic differentiation over dense tensors.
//!
//! The engine records every forward operation on a [`Tape`] and replays the
//! tape in reverse to accumulate gradients for each leaf that requires them.
//! It provides exactly the operations a prototype-matching sequence model
//! needs (1-D convolution, LSTM cell, cosine similarity, attention plumbing,
//! losses), plus finite-difference gradient verification and the Adam
//! optimizer.
//!
//! All reductions run in a fixed left-to-right order, so identical seeds and
//! inputs produce bit-identical values and gradients. The element type is
//! generic: training typically runs at `f32`, gradient checks at `f64`.

mod adam;
mod element;
mod error;
mod gradcheck;
pub mod rng;
mod tape;
mod tensor;

pub use adam::{adam_step, AdamParams, AdamState};
pub use element::Element;
pub use error::EngineError;
pub use gradcheck::{grad_check, GradCheckConfig, GradCheckReport, ParamCheck};
pub use tape::{Tape, Var};
pub use tensor::Tensor;

/// Result alias used throughout the engine.
pub type Result<T> = std::result::Result<T, EngineError>;
