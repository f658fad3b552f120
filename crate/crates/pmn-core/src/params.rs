use autodiff::rng::{normal_f64, uniform_in};
use autodiff::{Element, Tape, Tensor, Var};
use rand::RngCore;
use rand::SeedableRng;

use crate::config::PmnConfig;
use crate::error::ModelError;

/// Kernels and bias of one convolution layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer<F: Element> {
    pub kernels: Tensor<F>,
    pub bias: Tensor<F>,
}

/// Stacked gate weights of the hop LSTM (rows ordered i, f, g, o).
#[derive(Debug, Clone, PartialEq)]
pub struct LstmWeights<F: Element> {
    pub w_gate: Tensor<F>,
    pub u_gate: Tensor<F>,
    pub bias: Tensor<F>,
}

/// All trainable arrays of one model instance. Which blocks exist is a pure
/// function of the configuration variant.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<F: Element> {
    pub conv: Vec<ConvLayer<F>>,
    pub lstm: Option<LstmWeights<F>>,
    pub prototypes: Option<Tensor<F>>,
    pub head_w: Tensor<F>,
    pub head_b: Tensor<F>,
}

fn fan_uniform<F: Element>(
    rng: &mut dyn RngCore,
    shape: Vec<usize>,
    fan_in: usize,
    fan_out: usize,
) -> Tensor<F> {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n: usize = shape.iter().product();
    let values: Vec<F> = (0..n)
        .map(|_| F::from_f64_c(uniform_in(rng, -bound, bound)))
        .collect();
    Tensor::new(shape, values, true).expect("init shape consistent")
}

impl<F: Element> ModelParams<F> {
    /// Deterministic initialization from a seed.
    ///
    /// Weight matrices and kernels draw fan-based uniform values in
    /// `[-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))]`; biases start
    /// at zero except the LSTM forget gate (1.0); prototypes draw i.i.d.
    /// normal values with standard deviation `1/sqrt(d)`.
    pub fn init(cfg: &PmnConfig, seed: u64) -> Result<Self, ModelError> {
        cfg.validate()?;
        let mut rng = rand_chacha_rng(seed);
        let d = cfg.embed_dim;

        let mut conv = Vec::with_capacity(3);
        let mut c_in = 4usize;
        for layer in 0..3 {
            let c_out = cfg.conv_channels[layer];
            let width = cfg.conv_widths[layer];
            let kernels = fan_uniform(&mut rng, vec![c_out, c_in, width], c_in * width, c_out * width);
            let bias = Tensor::zeros(vec![c_out], true);
            conv.push(ConvLayer { kernels, bias });
            c_in = c_out;
        }

        let lstm = cfg.variant.uses_lstm().then(|| {
            let w_gate = fan_uniform(&mut rng, vec![4 * d, d], d, 4 * d);
            let u_gate = fan_uniform(&mut rng, vec![4 * d, 2 * d], 2 * d, 4 * d);
            let mut bias = Tensor::zeros(vec![4 * d], true);
            for v in &mut bias.values_mut()[d..2 * d] {
                *v = F::one();
            }
            LstmWeights { w_gate, u_gate, bias }
        });

        let prototypes = cfg.variant.uses_prototypes().then(|| {
            let std = 1.0 / (d as f64).sqrt();
            let values: Vec<F> = (0..cfg.num_labels * d)
                .map(|_| F::from_f64_c(normal_f64(&mut rng) * std))
                .collect();
            Tensor::new(vec![cfg.num_labels, d], values, true).expect("prototype shape")
        });

        let (h_in, h_out) = (cfg.head_input_dim(), cfg.head_output_dim());
        let head_w = fan_uniform(&mut rng, vec![h_out, h_in], h_in, h_out);
        let head_b = Tensor::zeros(vec![h_out], true);

        Ok(ModelParams { conv, lstm, prototypes, head_w, head_b })
    }

    /// Parameter arrays in a fixed order shared by the optimizer and the
    /// checkpoint format.
    pub fn named(&self) -> Vec<(&'static str, &Tensor<F>)> {
        let mut out = vec![
            ("conv1.kernels", &self.conv[0].kernels),
            ("conv1.bias", &self.conv[0].bias),
            ("conv2.kernels", &self.conv[1].kernels),
            ("conv2.bias", &self.conv[1].bias),
            ("conv3.kernels", &self.conv[2].kernels),
            ("conv3.bias", &self.conv[2].bias),
        ];
        if let Some(lstm) = &self.lstm {
            out.push(("lstm.w_gate", &lstm.w_gate));
            out.push(("lstm.u_gate", &lstm.u_gate));
            out.push(("lstm.bias", &lstm.bias));
        }
        if let Some(p) = &self.prototypes {
            out.push(("prototypes", p));
        }
        out.push(("head.weight", &self.head_w));
        out.push(("head.bias", &self.head_b));
        out
    }

    /// Mutable view in the same order as [`ModelParams::named`].
    pub fn named_mut(&mut self) -> Vec<(&'static str, &mut Tensor<F>)> {
        let mut out: Vec<(&'static str, &mut Tensor<F>)> = Vec::new();
        let [c1, c2, c3] = match self.conv.as_mut_slice() {
            [a, b, c] => [a, b, c],
            _ => unreachable!("always three conv layers"),
        };
        out.push(("conv1.kernels", &mut c1.kernels));
        out.push(("conv1.bias", &mut c1.bias));
        out.push(("conv2.kernels", &mut c2.kernels));
        out.push(("conv2.bias", &mut c2.bias));
        out.push(("conv3.kernels", &mut c3.kernels));
        out.push(("conv3.bias", &mut c3.bias));
        if let Some(lstm) = &mut self.lstm {
            out.push(("lstm.w_gate", &mut lstm.w_gate));
            out.push(("lstm.u_gate", &mut lstm.u_gate));
            out.push(("lstm.bias", &mut lstm.bias));
        }
        if let Some(p) = &mut self.prototypes {
            out.push(("prototypes", p));
        }
        out.push(("head.weight", &mut self.head_w));
        out.push(("head.bias", &mut self.head_b));
        out
    }

    /// Total trainable element count.
    pub fn param_count(&self) -> usize {
        self.named().iter().map(|(_, t)| t.numel()).sum()
    }

    /// Copy with all arrays converted through `f64`.
    pub fn cast<G: Element>(&self) -> ModelParams<G> {
        ModelParams {
            conv: self
                .conv
                .iter()
                .map(|l| ConvLayer {
                    kernels: l.kernels.cast(),
                    bias: l.bias.cast(),
                })
                .collect(),
            lstm: self.lstm.as_ref().map(|l| LstmWeights {
                w_gate: l.w_gate.cast(),
                u_gate: l.u_gate.cast(),
                bias: l.bias.cast(),
            }),
            prototypes: self.prototypes.as_ref().map(|p| p.cast()),
            head_w: self.head_w.cast(),
            head_b: self.head_b.cast(),
        }
    }

    /// Rebuilds the role-based var view from vars laid out in
    /// [`ModelParams::named`] order (as the gradient checker provides them).
    pub fn vars_from_ordered(&self, vars: &[Var]) -> ParamVars {
        assert_eq!(vars.len(), self.named().len(), "ordered var count mismatch");
        let mut it = vars.iter().copied();
        let mut next = || it.next().expect("length checked above");
        let conv: Vec<(Var, Var)> = (0..3).map(|_| (next(), next())).collect();
        let lstm = self.lstm.as_ref().map(|_| (next(), next(), next()));
        let prototypes = self.prototypes.as_ref().map(|_| next());
        let head = (next(), next());
        ParamVars { conv, lstm, prototypes, head }
    }

    /// Registers every parameter on a tape, in [`ModelParams::named`] order.
    /// With `track_grad` false the leaves are recorded as constants, which
    /// skips all backward work during evaluation.
    pub fn register(&self, tape: &mut Tape<F>, track_grad: bool) -> ParamVars {
        let mut reg = |t: &Tensor<F>| {
            tape.leaf_from(t.values(), t.shape(), track_grad)
                .expect("parameter tensors are internally consistent")
        };
        let conv: Vec<(Var, Var)> = self.conv.iter().map(|l| (reg(&l.kernels), reg(&l.bias))).collect();
        let lstm = self.lstm.as_ref().map(|l| (reg(&l.w_gate), reg(&l.u_gate), reg(&l.bias)));
        let prototypes = self.prototypes.as_ref().map(|p| reg(p));
        let head = (reg(&self.head_w), reg(&self.head_b));
        ParamVars { conv, lstm, prototypes, head }
    }
}

/// Tape handles for one registered parameter set.
#[derive(Debug, Clone)]
pub struct ParamVars {
    pub conv: Vec<(Var, Var)>,
    pub lstm: Option<(Var, Var, Var)>,
    pub prototypes: Option<Var>,
    pub head: (Var, Var),
}

impl ParamVars {
    /// Vars in the same order as [`ModelParams::named`].
    pub fn ordered(&self) -> Vec<Var> {
        let mut out = Vec::new();
        for (k, b) in &self.conv {
            out.push(*k);
            out.push(*b);
        }
        if let Some((w, u, b)) = self.lstm {
            out.push(w);
            out.push(u);
            out.push(b);
        }
        if let Some(p) = self.prototypes {
            out.push(p);
        }
        out.push(self.head.0);
        out.push(self.head.1);
        out
    }
}

fn rand_chacha_rng(seed: u64) -> impl RngCore {
    // ChaCha8 keyed by the seed; the stream is fixed by construction.
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}
