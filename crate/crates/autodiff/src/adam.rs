use crate::element::Element;
use crate::error::EngineError;
use crate::tensor::Tensor;
use crate::Result;

/// Adam hyperparameters. Defaults follow the original recipe.
#[derive(Debug, Clone, Copy)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second-moment buffers mirroring one parameter list, plus the shared
/// step counter.
#[derive(Debug, Clone)]
pub struct AdamState<F: Element> {
    pub params: AdamParams,
    m: Vec<Vec<F>>,
    v: Vec<Vec<F>>,
    t_step: u64,
}

impl<F: Element> AdamState<F> {
    /// Fresh zeroed state for parameters of the given sizes.
    pub fn new(params: AdamParams, sizes: &[usize]) -> Self {
        AdamState {
            params,
            m: sizes.iter().map(|n| vec![F::zero(); *n]).collect(),
            v: sizes.iter().map(|n| vec![F::zero(); *n]).collect(),
            t_step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t_step
    }

    pub fn num_slots(&self) -> usize {
        self.m.len()
    }
}

/// One Adam update over an aligned parameter/gradient list.
///
/// The step counter increments before bias correction. A non-finite gradient
/// aborts the step before any parameter is touched.
pub fn adam_step<F: Element>(
    params: &mut [&mut Tensor<F>],
    grads: &[&[F]],
    state: &mut AdamState<F>,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(EngineError::dim(
            "adam_step",
            format!(
                "{} params, {} grads, {} state slots",
                params.len(),
                grads.len(),
                state.m.len()
            ),
        ));
    }
    for (slot, (p, g)) in params.iter().zip(grads.iter()).enumerate() {
        if p.numel() != g.len() {
            return Err(EngineError::dim(
                "adam_step",
                format!("slot {slot}: {} param elements vs {} grad elements", p.numel(), g.len()),
            ));
        }
        if let Some(idx) = g.iter().position(|v| !v.is_finite()) {
            return Err(EngineError::NonFinite {
                context: format!("adam_step gradient slot {slot}"),
                index: idx,
            });
        }
    }

    state.t_step += 1;
    let t = state.t_step as i32;
    let beta1 = F::from_f64_c(state.params.beta1);
    let beta2 = F::from_f64_c(state.params.beta2);
    let lr = F::from_f64_c(state.params.learning_rate);
    let eps = F::from_f64_c(state.params.eps);
    let one = F::one();
    let bias1 = one - beta1.powi(t);
    let bias2 = one - beta2.powi(t);

    for (slot, (p, g)) in params.iter_mut().zip(grads.iter()).enumerate() {
        let m = &mut state.m[slot];
        let v = &mut state.v[slot];
        let theta = p.values_mut();
        for i in 0..g.len() {
            let gi = g[i];
            m[i] = beta1 * m[i] + (one - beta1) * gi;
            v[i] = beta2 * v[i] + (one - beta2) * gi * gi;
            let m_hat = m[i] / bias1;
            let v_hat = v[i] / bias2;
            theta[i] = theta[i] - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
