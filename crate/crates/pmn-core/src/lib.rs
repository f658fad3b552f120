//! The prototype matching network model family.
//!
//! A three-layer convolutional encoder embeds a one-hot DNA window; a bank of
//! learned per-label prototype vectors is matched against the embedding
//! through cosine attention; an LSTM refines the match over several hops,
//! reading back an attention-weighted prototype combination each time. The
//! head scores every label from the final hidden state and read vector. Two
//! loss terms train it: binary cross entropy on the predictions and a squared
//! penalty tying the final attention weights to the labels.

pub mod checkpoint;
mod config;
mod error;
mod loss;
mod model;
mod params;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointMeta};
pub use config::{AttentionMode, PmnConfig, Variant};
pub use error::ModelError;
pub use loss::{classification_loss, prototype_matching_loss, total_loss};
pub use model::{
    attention_weights, encode_sequence, forward, forward_vars, hop, init_read_vector,
    ForwardOutput, ForwardVars, HopState, HopVars,
};
pub use params::{ConvLayer, LstmWeights, ModelParams, ParamVars};
