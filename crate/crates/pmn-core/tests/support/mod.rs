//! Straight-line forward reimplementation used as an oracle. Plain nested
//! loops over `f64` slices, no tape, shared with nothing in the crate under
//! test.

use pmn_core::{AttentionMode, ModelParams, PmnConfig, Variant};

pub struct OracleHop {
    pub h_hat: Vec<f64>,
    pub h: Vec<f64>,
    pub c: Vec<f64>,
    pub r: Vec<f64>,
    pub w: Vec<f64>,
}

pub struct OracleOut {
    pub x_embed: Vec<f64>,
    pub hops: Vec<OracleHop>,
    pub y_hat: Vec<f64>,
    pub w_final: Option<Vec<f64>>,
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

fn conv_same(input: &[f64], c_in: usize, len: usize, kernels: &[f64], bias: &[f64], c_out: usize, width: usize) -> Vec<f64> {
    let pad = (width as isize - 1) / 2;
    let mut out = vec![0.0; c_out * len];
    for j in 0..c_out {
        for t in 0..len {
            let mut acc = bias[j];
            for c in 0..c_in {
                for o in 0..width {
                    let src = t as isize + o as isize - pad;
                    if src >= 0 && (src as usize) < len {
                        acc += kernels[(j * c_in + c) * width + o] * input[c * len + src as usize];
                    }
                }
            }
            out[j * len + t] = acc;
        }
    }
    out
}

fn cosine(u: &[f64], v: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for i in 0..u.len() {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    dot / (nu.sqrt().max(1e-12) * nv.sqrt().max(1e-12))
}

fn weights_against_bank(query: &[f64], bank: &[f64], l: usize, d: usize, epsilon: f64, softmax: bool) -> Vec<f64> {
    let scores: Vec<f64> = (0..l)
        .map(|i| epsilon * cosine(query, &bank[i * d..(i + 1) * d]))
        .collect();
    if softmax {
        let exps: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
        let total: f64 = exps.iter().sum();
        exps.iter().map(|e| e / total).collect()
    } else {
        scores.iter().map(|s| sigmoid(*s)).collect()
    }
}

fn read_vector(w: &[f64], bank: &[f64], l: usize, d: usize) -> Vec<f64> {
    let mut r = vec![0.0; d];
    for i in 0..l {
        for j in 0..d {
            r[j] += w[i] * bank[i * d + j];
        }
    }
    r
}

fn head(z: &[f64], w: &[f64], b: &[f64], out_dim: usize) -> Vec<f64> {
    let n = z.len();
    (0..out_dim)
        .map(|i| {
            let mut acc = b[i];
            for j in 0..n {
                acc += w[i * n + j] * z[j];
            }
            sigmoid(acc)
        })
        .collect()
}

/// Evaluation-mode forward pass (dropout is the identity).
pub fn oracle_forward(params: &ModelParams<f64>, cfg: &PmnConfig, x: &[f64]) -> OracleOut {
    let t_len = cfg.seq_len;
    let d = cfg.embed_dim;
    let l = cfg.num_labels;

    // encoder
    let mut act = x.to_vec();
    let mut c_in = 4usize;
    for (layer, conv) in params.conv.iter().enumerate() {
        let c_out = cfg.conv_channels[layer];
        let width = cfg.conv_widths[layer];
        let pre = conv_same(&act, c_in, t_len, conv.kernels.values(), conv.bias.values(), c_out, width);
        act = pre.iter().map(|v| v.max(0.0)).collect();
        c_in = c_out;
    }
    let mut x_embed = vec![f64::NEG_INFINITY; d];
    for c in 0..d {
        for t in 0..t_len {
            let v = act[c * t_len + t];
            if v > x_embed[c] {
                x_embed[c] = v;
            }
        }
    }

    match cfg.variant {
        Variant::Pmn => {
            let bank = params.prototypes.as_ref().expect("pmn bank").values();
            let lstm = params.lstm.as_ref().expect("pmn lstm");
            let (wg, ug, bg) = (lstm.w_gate.values(), lstm.u_gate.values(), lstm.bias.values());
            let mut h = vec![0.0; d];
            let mut c_state = vec![0.0; d];
            let mut r: Vec<f64> = (0..d)
                .map(|j| (0..l).map(|i| bank[i * d + j]).sum::<f64>() / l as f64)
                .collect();
            let mut hops = Vec::with_capacity(cfg.hops);
            for k in 1..=cfg.hops {
                let mut h_cat = h.clone();
                h_cat.extend_from_slice(&r);
                let mut pre = vec![0.0; 4 * d];
                for row in 0..4 * d {
                    let mut acc = bg[row];
                    for j in 0..d {
                        acc += wg[row * d + j] * x_embed[j];
                    }
                    for j in 0..2 * d {
                        acc += ug[row * 2 * d + j] * h_cat[j];
                    }
                    pre[row] = acc;
                }
                let mut h_hat = vec![0.0; d];
                let mut c_next = vec![0.0; d];
                for j in 0..d {
                    let i_g = sigmoid(pre[j]);
                    let f_g = sigmoid(pre[d + j]);
                    let g_g = pre[2 * d + j].tanh();
                    let o_g = sigmoid(pre[3 * d + j]);
                    c_next[j] = f_g * c_state[j] + i_g * g_g;
                    h_hat[j] = o_g * c_next[j].tanh();
                }
                let h_next: Vec<f64> = (0..d).map(|j| h_hat[j] + x_embed[j]).collect();
                let softmax = cfg.attention == AttentionMode::SoftmaxHops && k < cfg.hops;
                let w = weights_against_bank(&h_hat, bank, l, d, cfg.epsilon, softmax);
                let r_next = read_vector(&w, bank, l, d);
                hops.push(OracleHop {
                    h_hat,
                    h: h_next.clone(),
                    c: c_next.clone(),
                    r: r_next.clone(),
                    w,
                });
                h = h_next;
                c_state = c_next;
                r = r_next;
            }
            let last = hops.last().expect("hops");
            let mut z = last.h.clone();
            z.extend_from_slice(&last.r);
            let y_hat = head(&z, params.head_w.values(), params.head_b.values(), l);
            let w_final = last.w.clone();
            OracleOut {
                x_embed,
                hops,
                y_hat,
                w_final: Some(w_final),
            }
        }
        Variant::PmnNoLstm => {
            let bank = params.prototypes.as_ref().expect("bank").values();
            let w = weights_against_bank(&x_embed, bank, l, d, cfg.epsilon, false);
            let r = read_vector(&w, bank, l, d);
            let mut z = x_embed.clone();
            z.extend_from_slice(&r);
            let y_hat = head(&z, params.head_w.values(), params.head_b.values(), l);
            OracleOut {
                x_embed,
                hops: Vec::new(),
                y_hat,
                w_final: Some(w),
            }
        }
        Variant::CnnMulti | Variant::CnnSingle => {
            let out_dim = if cfg.variant == Variant::CnnSingle { 1 } else { l };
            let y_hat = head(&x_embed, params.head_w.values(), params.head_b.values(), out_dim);
            OracleOut {
                x_embed,
                hops: Vec::new(),
                y_hat,
                w_final: None,
            }
        }
    }
}

/// Random one-hot input of shape `[4 x T]` flattened row-major.
pub fn random_one_hot(rng: &mut impl rand::RngCore, t_len: usize) -> Vec<f64> {
    let mut x = vec![0.0; 4 * t_len];
    for t in 0..t_len {
        let base = autodiff::rng::uniform_index(rng, 4);
        x[base * t_len + t] = 1.0;
    }
    x
}
