use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Which attention squashing the hop weights use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttentionMode {
    /// Every hop applies `sigmoid(epsilon * cosine)` per prototype.
    Sigmoid,
    /// Intermediate hops normalize with a softmax over `epsilon * cosine`;
    /// the final hop still uses the elementwise sigmoid.
    SoftmaxHops,
}

/// Model family member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Encoder plus a one-output head; one model per label.
    CnnSingle,
    /// Encoder plus a multi-label head, no prototypes.
    CnnMulti,
    /// Prototype attention driven directly by the sequence embedding.
    PmnNoLstm,
    /// Full model with hop LSTM.
    Pmn,
}

impl Variant {
    pub fn uses_prototypes(self) -> bool {
        matches!(self, Variant::PmnNoLstm | Variant::Pmn)
    }

    pub fn uses_lstm(self) -> bool {
        matches!(self, Variant::Pmn)
    }
}

/// Hyperparameters of the model family.
///
/// The embedding dimension must equal the last convolution channel count,
/// since the encoder output feeds prototype matching directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PmnConfig {
    /// Label count (one prototype and one output per label).
    pub num_labels: usize,
    /// Embedding dimension `d`.
    pub embed_dim: usize,
    /// Input sequence length `T`.
    pub seq_len: usize,
    /// Hop count `K` (ignored by the no-LSTM and CNN variants).
    pub hops: usize,
    /// Attention sharpness inside the squashing.
    pub epsilon: f64,
    /// Prototype-matching loss weight.
    pub lambda: f64,
    pub attention: AttentionMode,
    pub variant: Variant,
    /// Channel counts of the three convolution layers.
    pub conv_channels: [usize; 3],
    /// Odd kernel widths of the three convolution layers.
    pub conv_widths: [usize; 3],
    /// Dropout rate on the embedding and the pre-head concatenation.
    pub dropout: f64,
}

impl Default for PmnConfig {
    fn default() -> Self {
        PmnConfig {
            num_labels: 1,
            embed_dim: 128,
            seq_len: 200,
            hops: 5,
            epsilon: 20.0,
            lambda: 1.0,
            attention: AttentionMode::Sigmoid,
            variant: Variant::Pmn,
            conv_channels: [512, 256, 128],
            conv_widths: [9, 5, 3],
            dropout: 0.2,
        }
    }
}

impl PmnConfig {
    /// Paper-scale defaults with the given label count.
    pub fn with_labels(num_labels: usize) -> Self {
        PmnConfig {
            num_labels,
            ..PmnConfig::default()
        }
    }

    /// Head input width: the full model and the no-LSTM variant feed a
    /// concatenation of two `d`-vectors; the CNN variants feed the embedding.
    pub fn head_input_dim(&self) -> usize {
        match self.variant {
            Variant::Pmn | Variant::PmnNoLstm => 2 * self.embed_dim,
            Variant::CnnMulti | Variant::CnnSingle => self.embed_dim,
        }
    }

    /// Head output width: one per label, or a single output for the
    /// single-label CNN.
    pub fn head_output_dim(&self) -> usize {
        match self.variant {
            Variant::CnnSingle => 1,
            _ => self.num_labels,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.num_labels == 0 {
            return Err(ModelError::Config("num_labels must be positive".into()));
        }
        if self.embed_dim != self.conv_channels[2] {
            return Err(ModelError::Config(format!(
                "embed_dim {} must equal the last conv channel count {}",
                self.embed_dim, self.conv_channels[2]
            )));
        }
        if self.conv_channels.iter().any(|c| *c == 0) {
            return Err(ModelError::Config("conv channel counts must be positive".into()));
        }
        for w in self.conv_widths {
            if w % 2 == 0 || w == 0 {
                return Err(ModelError::Config(format!("conv width {w} must be odd")));
            }
        }
        let max_width = *self.conv_widths.iter().max().expect("three widths");
        if self.seq_len < max_width {
            return Err(ModelError::Config(format!(
                "seq_len {} shorter than the largest kernel width {max_width}",
                self.seq_len
            )));
        }
        if self.variant == Variant::Pmn && self.hops == 0 {
            return Err(ModelError::Config("the full model needs at least one hop".into()));
        }
        if self.epsilon <= 0.0 {
            return Err(ModelError::Config("epsilon must be positive".into()));
        }
        if self.lambda < 0.0 {
            return Err(ModelError::Config("lambda must be non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ModelError::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }
}
