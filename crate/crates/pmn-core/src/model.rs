use autodiff::{Element, Tape, Tensor, Var};
use rand::RngCore;

use crate::config::{AttentionMode, PmnConfig, Variant};
use crate::error::ModelError;
use crate::params::{ModelParams, ParamVars};

/// Per-hop tape handles: the raw LSTM output, the residually updated
/// embedding, the cell state, the read vector, and the attention weights.
#[derive(Debug, Clone, Copy)]
pub struct HopVars {
    pub h_hat: Var,
    pub h: Var,
    pub c: Var,
    pub r: Var,
    pub w: Var,
}

/// Tape handles for a full forward pass.
#[derive(Debug, Clone)]
pub struct ForwardVars {
    pub x_embed: Var,
    pub hops: Vec<HopVars>,
    pub y_hat: Var,
    /// Final attention weights; absent for the CNN variants.
    pub w_final: Option<Var>,
}

/// Extracted values of one hop, for inspection and logging.
#[derive(Debug, Clone)]
pub struct HopState<F: Element> {
    pub h_hat: Vec<F>,
    pub h: Vec<F>,
    pub c: Vec<F>,
    pub r: Vec<F>,
    pub w: Vec<F>,
}

/// Extracted values of a full forward pass.
#[derive(Debug, Clone)]
pub struct ForwardOutput<F: Element> {
    pub x_embed: Vec<F>,
    pub hops: Vec<HopState<F>>,
    pub y_hat: Vec<F>,
    pub w_final: Option<Vec<F>>,
}

/// Encodes a one-hot sequence into the embedding: three conv+ReLU layers,
/// a global max-pool over the length axis, then dropout in training mode.
pub fn encode_sequence<F: Element>(
    tape: &mut Tape<F>,
    params: &ParamVars,
    cfg: &PmnConfig,
    x: Var,
    training: bool,
    rng: &mut dyn RngCore,
) -> Result<Var, ModelError> {
    let shape = tape.shape(x);
    if shape.len() != 2 || shape[0] != 4 {
        return Err(ModelError::Dimension(format!(
            "encoder expects a [4 x T] one-hot input, got {shape:?}"
        )));
    }
    if shape[1] != cfg.seq_len {
        return Err(ModelError::Dimension(format!(
            "input length {} does not match configured seq_len {}",
            shape[1], cfg.seq_len
        )));
    }
    let mut h = x;
    for (kernels, bias) in &params.conv {
        let conv = tape.conv1d(h, *kernels, *bias)?;
        h = tape.relu(conv);
    }
    let pooled = tape.global_maxpool(h)?;
    Ok(tape.dropout(pooled, cfg.dropout, training, rng)?)
}

/// Mean of all prototype rows, the initial read vector.
pub fn init_read_vector<F: Element>(tape: &mut Tape<F>, prototypes: Var) -> Result<Var, ModelError> {
    let rows = tape.shape(prototypes)[0];
    let mean_weight = F::from_f64_c(1.0 / rows as f64);
    let weights = vec![mean_weight; rows];
    let w = tape.constant(&weights, &[rows])?;
    Ok(tape.weighted_row_sum(w, prototypes)?)
}

/// Attention weights of a query against every prototype row: cosine
/// similarities scaled by `epsilon`, squashed by sigmoid or normalized by
/// softmax.
pub fn attention_weights<F: Element>(
    tape: &mut Tape<F>,
    query: Var,
    prototypes: Var,
    epsilon: f64,
    softmax: bool,
) -> Result<Var, ModelError> {
    let rows = tape.shape(prototypes)[0];
    let mut sims = Vec::with_capacity(rows);
    for i in 0..rows {
        let p = tape.lookup_row(prototypes, i)?;
        sims.push(tape.cosine(query, p)?);
    }
    let stacked = tape.stack(&sims)?;
    let scaled = tape.scale(stacked, F::from_f64_c(epsilon));
    let w = if softmax {
        tape.softmax(scaled)?
    } else {
        tape.sigmoid(scaled)
    };
    Ok(w)
}

/// One hop: the LSTM consumes the constant embedding plus the previous
/// hidden/read pair, the residual update produces `h`, and the fresh hidden
/// state is matched against the prototype bank to form the next read vector.
pub fn hop<F: Element>(
    tape: &mut Tape<F>,
    cfg: &PmnConfig,
    params: &ParamVars,
    x_embed: Var,
    h_prev: Var,
    c_prev: Var,
    r_prev: Var,
    softmax: bool,
) -> Result<HopVars, ModelError> {
    let (w_gate, u_gate, bias) = params
        .lstm
        .ok_or_else(|| ModelError::Config("hop requires LSTM weights".into()))?;
    let prototypes = params
        .prototypes
        .ok_or_else(|| ModelError::Config("hop requires a prototype bank".into()))?;
    let h_cat = tape.concat(h_prev, r_prev)?;
    let (h_hat, c) = tape.lstm_cell(x_embed, h_cat, c_prev, w_gate, u_gate, bias)?;
    let h = tape.add(h_hat, x_embed)?;
    let w = attention_weights(tape, h_hat, prototypes, cfg.epsilon, softmax)?;
    let r = tape.weighted_row_sum(w, prototypes)?;
    Ok(HopVars { h_hat, h, c, r, w })
}

/// Full forward pass for any variant. `x` must be a `[4 x T]` one-hot var
/// already registered on the tape.
pub fn forward_vars<F: Element>(
    tape: &mut Tape<F>,
    params: &ParamVars,
    cfg: &PmnConfig,
    x: Var,
    training: bool,
    rng: &mut dyn RngCore,
) -> Result<ForwardVars, ModelError> {
    let x_embed = encode_sequence(tape, params, cfg, x, training, rng)?;
    match cfg.variant {
        Variant::Pmn => {
            let prototypes = params
                .prototypes
                .ok_or_else(|| ModelError::Config("pmn variant requires prototypes".into()))?;
            let d = cfg.embed_dim;
            let zeros = vec![F::zero(); d];
            let mut h_prev = tape.constant(&zeros, &[d])?;
            let mut c_prev = tape.constant(&zeros, &[d])?;
            let mut r_prev = init_read_vector(tape, prototypes)?;
            let mut hops = Vec::with_capacity(cfg.hops);
            for k in 1..=cfg.hops {
                let softmax = cfg.attention == AttentionMode::SoftmaxHops && k < cfg.hops;
                let state = hop(tape, cfg, params, x_embed, h_prev, c_prev, r_prev, softmax)?;
                h_prev = state.h;
                c_prev = state.c;
                r_prev = state.r;
                hops.push(state);
            }
            let last = hops.last().expect("at least one hop");
            let z = tape.concat(last.h, last.r)?;
            let z = tape.dropout(z, cfg.dropout, training, rng)?;
            let o = tape.affine(z, params.head.0, params.head.1)?;
            let y_hat = tape.sigmoid(o);
            Ok(ForwardVars {
                x_embed,
                w_final: Some(last.w),
                hops,
                y_hat,
            })
        }
        Variant::PmnNoLstm => {
            let prototypes = params
                .prototypes
                .ok_or_else(|| ModelError::Config("no-lstm variant requires prototypes".into()))?;
            let w = attention_weights(tape, x_embed, prototypes, cfg.epsilon, false)?;
            let r = tape.weighted_row_sum(w, prototypes)?;
            let z = tape.concat(x_embed, r)?;
            let z = tape.dropout(z, cfg.dropout, training, rng)?;
            let o = tape.affine(z, params.head.0, params.head.1)?;
            let y_hat = tape.sigmoid(o);
            Ok(ForwardVars {
                x_embed,
                hops: Vec::new(),
                y_hat,
                w_final: Some(w),
            })
        }
        Variant::CnnMulti | Variant::CnnSingle => {
            let o = tape.affine(x_embed, params.head.0, params.head.1)?;
            let y_hat = tape.sigmoid(o);
            Ok(ForwardVars {
                x_embed,
                hops: Vec::new(),
                y_hat,
                w_final: None,
            })
        }
    }
}

/// Convenience forward pass on a private tape, returning extracted values.
pub fn forward<F: Element>(
    params: &ModelParams<F>,
    cfg: &PmnConfig,
    x: &Tensor<F>,
    training: bool,
    rng: &mut dyn RngCore,
) -> Result<ForwardOutput<F>, ModelError> {
    let mut tape = Tape::new();
    let pv = params.register(&mut tape, false);
    let xv = tape.leaf_from(x.values(), x.shape(), false)?;
    let fwd = forward_vars(&mut tape, &pv, cfg, xv, training, rng)?;
    Ok(ForwardOutput {
        x_embed: tape.value(fwd.x_embed).to_vec(),
        hops: fwd
            .hops
            .iter()
            .map(|h| HopState {
                h_hat: tape.value(h.h_hat).to_vec(),
                h: tape.value(h.h).to_vec(),
                c: tape.value(h.c).to_vec(),
                r: tape.value(h.r).to_vec(),
                w: tape.value(h.w).to_vec(),
            })
            .collect(),
        y_hat: tape.value(fwd.y_hat).to_vec(),
        w_final: fwd.w_final.map(|w| tape.value(w).to_vec()),
    })
}
