use rand::RngCore;

use crate::element::Element;
use crate::error::EngineError;
use crate::rng::uniform_f64;
use crate::tensor::Tensor;
use crate::Result;

/// Norm floor for cosine similarity; keeps the denominator away from zero on
/// degenerate embeddings. A clamped zero vector yields cosine 0.
const COSINE_NORM_FLOOR: f64 = 1e-12;

/// Prediction clamp applied inside the binary cross entropy op before logs.
const BCE_CLAMP: f64 = 1e-7;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(pub(crate) usize);

/// One recorded operation: inputs, output, and any saved forward context.
#[derive(Debug, Clone)]
enum Node<F: Element> {
    Add { a: Var, b: Var, out: Var },
    Mul { a: Var, b: Var, out: Var },
    Scale { x: Var, factor: F, out: Var },
    Relu { x: Var, out: Var },
    Sigmoid { x: Var, out: Var },
    Tanh { x: Var, out: Var },
    Sum { x: Var, out: Var },
    MatVec { w: Var, x: Var, out: Var, rows: usize, cols: usize },
    Conv1d { input: Var, kernels: Var, bias: Var, out: Var, c_in: usize, c_out: usize, len: usize, width: usize },
    GlobalMaxPool { x: Var, out: Var, argmax: Vec<usize>, len: usize },
    LookupRow { table: Var, row: usize, out: Var, cols: usize },
    Cosine { u: Var, v: Var, out: Var },
    Stack { xs: Vec<Var>, out: Var },
    Concat { a: Var, b: Var, out: Var },
    Slice { x: Var, start: usize, out: Var },
    Softmax { x: Var, out: Var },
    Dropout { x: Var, mask: Vec<F>, out: Var },
    WeightedRowSum { weights: Var, table: Var, out: Var, rows: usize, cols: usize },
    Bce { yhat: Var, targets: Vec<F>, out: Var },
    SqErr { x: Var, targets: Vec<F>, out: Var },
}

/// Records a forward computation and replays it in reverse for gradients.
///
/// Leaves are registered with [`Tape::leaf`] (values are copied in, so the
/// tape never aliases caller memory). After [`Tape::backward`], gradients are
/// read back per [`Var`]. Calling `backward` again without resetting the tape
/// accumulates additively: two passes yield exactly twice the gradients.
pub struct Tape<F: Element> {
    vals: Vec<Vec<F>>,
    shapes: Vec<Vec<usize>>,
    needs: Vec<bool>,
    nodes: Vec<Node<F>>,
    grads: Vec<Option<Vec<F>>>,
}

impl<F: Element> Default for Tape<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Element> Tape<F> {
    pub fn new() -> Self {
        Tape {
            vals: Vec::new(),
            shapes: Vec::new(),
            needs: Vec::new(),
            nodes: Vec::new(),
            grads: Vec::new(),
        }
    }

    fn push(&mut self, values: Vec<F>, shape: Vec<usize>, needs_grad: bool) -> Var {
        let id = self.vals.len();
        self.vals.push(values);
        self.shapes.push(shape);
        self.needs.push(needs_grad);
        self.grads.push(None);
        Var(id)
    }

    /// Registers a tensor as a leaf; gradient tracking follows the tensor.
    pub fn leaf(&mut self, t: &Tensor<F>) -> Var {
        self.push(t.values().to_vec(), t.shape().to_vec(), t.requires_grad())
    }

    /// Registers raw values as a leaf with explicit gradient tracking.
    pub fn leaf_from(&mut self, values: &[F], shape: &[usize], requires_grad: bool) -> Result<Var> {
        let expect: usize = shape.iter().product();
        if expect != values.len() {
            return Err(EngineError::dim(
                "leaf",
                format!("shape {:?} needs {} elements, got {}", shape, expect, values.len()),
            ));
        }
        Ok(self.push(values.to_vec(), shape.to_vec(), requires_grad))
    }

    /// Non-differentiable constant.
    pub fn constant(&mut self, values: &[F], shape: &[usize]) -> Result<Var> {
        self.leaf_from(values, shape, false)
    }

    pub fn value(&self, v: Var) -> &[F] {
        &self.vals[v.0]
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.shapes[v.0]
    }

    /// Value of a single-element var.
    pub fn scalar_value(&self, v: Var) -> F {
        debug_assert_eq!(self.vals[v.0].len(), 1);
        self.vals[v.0][0]
    }

    /// Accumulated gradient for `v`; `None` if no backward pass reached it.
    pub fn grad(&self, v: Var) -> Option<&[F]> {
        self.grads[v.0].as_deref()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    fn needs_any(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.needs[v.0])
    }

    // ---- elementwise ----

    /// Elementwise sum of two same-shape tensors.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.shapes[a.0] != self.shapes[b.0] {
            return Err(EngineError::dim(
                "add",
                format!("{:?} vs {:?}", self.shapes[a.0], self.shapes[b.0]),
            ));
        }
        let values: Vec<F> = self.vals[a.0]
            .iter()
            .zip(&self.vals[b.0])
            .map(|(x, y)| *x + *y)
            .collect();
        let out = self.push(values, self.shapes[a.0].clone(), self.needs_any(&[a, b]));
        self.nodes.push(Node::Add { a, b, out });
        Ok(out)
    }

    /// Elementwise product of two same-shape tensors.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.shapes[a.0] != self.shapes[b.0] {
            return Err(EngineError::dim(
                "mul",
                format!("{:?} vs {:?}", self.shapes[a.0], self.shapes[b.0]),
            ));
        }
        let values: Vec<F> = self.vals[a.0]
            .iter()
            .zip(&self.vals[b.0])
            .map(|(x, y)| *x * *y)
            .collect();
        let out = self.push(values, self.shapes[a.0].clone(), self.needs_any(&[a, b]));
        self.nodes.push(Node::Mul { a, b, out });
        Ok(out)
    }

    /// Multiplies every element by a constant.
    pub fn scale(&mut self, x: Var, factor: F) -> Var {
        let values: Vec<F> = self.vals[x.0].iter().map(|v| *v * factor).collect();
        let out = self.push(values, self.shapes[x.0].clone(), self.needs[x.0]);
        self.nodes.push(Node::Scale { x, factor, out });
        out
    }

    /// Elementwise max(0, x). The subgradient at exactly 0 is 0.
    pub fn relu(&mut self, x: Var) -> Var {
        let values: Vec<F> = self.vals[x.0]
            .iter()
            .map(|v| if *v > F::zero() { *v } else { F::zero() })
            .collect();
        let out = self.push(values, self.shapes[x.0].clone(), self.needs[x.0]);
        self.nodes.push(Node::Relu { x, out });
        out
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let values: Vec<F> = self.vals[x.0]
            .iter()
            .map(|v| F::one() / (F::one() + (-*v).exp()))
            .collect();
        let out = self.push(values, self.shapes[x.0].clone(), self.needs[x.0]);
        self.nodes.push(Node::Sigmoid { x, out });
        out
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let values: Vec<F> = self.vals[x.0].iter().map(|v| v.tanh()).collect();
        let out = self.push(values, self.shapes[x.0].clone(), self.needs[x.0]);
        self.nodes.push(Node::Tanh { x, out });
        out
    }

    /// Sum of all elements, as a scalar.
    pub fn sum(&mut self, x: Var) -> Var {
        let mut total = F::zero();
        for v in &self.vals[x.0] {
            total += *v;
        }
        let out = self.push(vec![total], vec![], self.needs[x.0]);
        self.nodes.push(Node::Sum { x, out });
        out
    }

    // ---- linear algebra ----

    /// Matrix-vector product `w · x` with `w: [rows × cols]`, `x: [cols]`.
    pub fn matvec(&mut self, w: Var, x: Var) -> Result<Var> {
        let wshape = &self.shapes[w.0];
        if wshape.len() != 2 {
            return Err(EngineError::dim("matvec", format!("matrix rank {} != 2", wshape.len())));
        }
        let (rows, cols) = (wshape[0], wshape[1]);
        if self.shapes[x.0] != [cols] {
            return Err(EngineError::dim(
                "matvec",
                format!("matrix [{rows}, {cols}] vs vector {:?}", self.shapes[x.0]),
            ));
        }
        let wv = &self.vals[w.0];
        let xv = &self.vals[x.0];
        let mut values = vec![F::zero(); rows];
        for i in 0..rows {
            let row = &wv[i * cols..(i + 1) * cols];
            let mut acc = F::zero();
            for j in 0..cols {
                acc += row[j] * xv[j];
            }
            values[i] = acc;
        }
        let out = self.push(values, vec![rows], self.needs_any(&[w, x]));
        self.nodes.push(Node::MatVec { w, x, out, rows, cols });
        Ok(out)
    }

    /// `W·x + b`, the linear layer.
    pub fn affine(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let wx = self.matvec(w, x)?;
        self.add(wx, b)
    }

    /// Same-padded 1-D correlation over `input: [c_in × len]` with
    /// `kernels: [c_out × c_in × width]` (odd width) and `bias: [c_out]`.
    /// Output keeps the input length.
    pub fn conv1d(&mut self, input: Var, kernels: Var, bias: Var) -> Result<Var> {
        let ishape = &self.shapes[input.0];
        let kshape = &self.shapes[kernels.0];
        if ishape.len() != 2 {
            return Err(EngineError::dim("conv1d", format!("input rank {} != 2", ishape.len())));
        }
        if kshape.len() != 3 {
            return Err(EngineError::dim("conv1d", format!("kernel rank {} != 3", kshape.len())));
        }
        let (c_in, len) = (ishape[0], ishape[1]);
        let (c_out, k_in, width) = (kshape[0], kshape[1], kshape[2]);
        if k_in != c_in {
            return Err(EngineError::dim(
                "conv1d",
                format!("kernel expects {k_in} input channels, input has {c_in}"),
            ));
        }
        if width % 2 == 0 {
            return Err(EngineError::dim("conv1d", format!("kernel width {width} must be odd")));
        }
        if len < width {
            return Err(EngineError::dim(
                "conv1d",
                format!("input length {len} shorter than kernel width {width}"),
            ));
        }
        if self.shapes[bias.0] != [c_out] {
            return Err(EngineError::dim(
                "conv1d",
                format!("bias {:?} vs {c_out} output channels", self.shapes[bias.0]),
            ));
        }
        let pad = (width - 1) / 2;
        let xv = &self.vals[input.0];
        let kv = &self.vals[kernels.0];
        let bv = &self.vals[bias.0];
        let mut values = vec![F::zero(); c_out * len];
        for j in 0..c_out {
            let row = &mut values[j * len..(j + 1) * len];
            for t in row.iter_mut() {
                *t = bv[j];
            }
            for c in 0..c_in {
                let x_row = &xv[c * len..(c + 1) * len];
                for o in 0..width {
                    let k = kv[(j * c_in + c) * width + o];
                    // output position t reads input position t + o - pad
                    let (t_lo, t_hi) = conv_span(len, o, pad);
                    let shift = o as isize - pad as isize;
                    for t in t_lo..t_hi {
                        row[t] += k * x_row[(t as isize + shift) as usize];
                    }
                }
            }
        }
        let out = self.push(values, vec![c_out, len], self.needs_any(&[input, kernels, bias]));
        self.nodes.push(Node::Conv1d { input, kernels, bias, out, c_in, c_out, len, width });
        Ok(out)
    }

    /// Per-channel maximum over the length axis of `x: [channels × len]`.
    /// Gradient routes to the first maximizing position in each channel.
    pub fn global_maxpool(&mut self, x: Var) -> Result<Var> {
        let shape = &self.shapes[x.0];
        if shape.len() != 2 {
            return Err(EngineError::dim("global_maxpool", format!("input rank {} != 2", shape.len())));
        }
        let (channels, len) = (shape[0], shape[1]);
        if len == 0 {
            return Err(EngineError::dim("global_maxpool", "empty length axis".to_string()));
        }
        let xv = &self.vals[x.0];
        let mut values = vec![F::zero(); channels];
        let mut argmax = vec![0usize; channels];
        for c in 0..channels {
            let row = &xv[c * len..(c + 1) * len];
            let mut best = row[0];
            let mut best_at = 0;
            for (t, v) in row.iter().enumerate().skip(1) {
                if *v > best {
                    best = *v;
                    best_at = t;
                }
            }
            values[c] = best;
            argmax[c] = best_at;
        }
        let out = self.push(values, vec![channels], self.needs[x.0]);
        self.nodes.push(Node::GlobalMaxPool { x, out, argmax, len });
        Ok(out)
    }

    /// Row `row` of `table: [rows × cols]`. Gradient accumulates only into
    /// that row.
    pub fn lookup_row(&mut self, table: Var, row: usize) -> Result<Var> {
        let shape = &self.shapes[table.0];
        if shape.len() != 2 {
            return Err(EngineError::dim("lookup_row", format!("table rank {} != 2", shape.len())));
        }
        let (rows, cols) = (shape[0], shape[1]);
        if row >= rows {
            return Err(EngineError::Index { op: "lookup_row", index: row, bound: rows });
        }
        let values = self.vals[table.0][row * cols..(row + 1) * cols].to_vec();
        let out = self.push(values, vec![cols], self.needs[table.0]);
        self.nodes.push(Node::LookupRow { table, row, out, cols });
        Ok(out)
    }

    /// Cosine similarity of two equal-length vectors, with both norms clamped
    /// to a small floor so degenerate inputs never divide by zero.
    pub fn cosine(&mut self, u: Var, v: Var) -> Result<Var> {
        if self.shapes[u.0] != self.shapes[v.0] || self.shapes[u.0].len() != 1 {
            return Err(EngineError::dim(
                "cosine",
                format!("{:?} vs {:?}", self.shapes[u.0], self.shapes[v.0]),
            ));
        }
        let (c, _, _, _, _) = cosine_parts(&self.vals[u.0], &self.vals[v.0]);
        let out = self.push(vec![c], vec![], self.needs_any(&[u, v]));
        self.nodes.push(Node::Cosine { u, v, out });
        Ok(out)
    }

    /// Packs scalar vars into a vector, in order.
    pub fn stack(&mut self, xs: &[Var]) -> Result<Var> {
        let mut values = Vec::with_capacity(xs.len());
        for x in xs {
            if self.vals[x.0].len() != 1 {
                return Err(EngineError::dim("stack", "inputs must be scalars".to_string()));
            }
            values.push(self.vals[x.0][0]);
        }
        let needs = self.needs_any(xs);
        let out = self.push(values, vec![xs.len()], needs);
        self.nodes.push(Node::Stack { xs: xs.to_vec(), out });
        Ok(out)
    }

    /// Concatenates two vectors.
    pub fn concat(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.shapes[a.0].len() != 1 || self.shapes[b.0].len() != 1 {
            return Err(EngineError::dim("concat", "both inputs must be vectors".to_string()));
        }
        let mut values = self.vals[a.0].clone();
        values.extend_from_slice(&self.vals[b.0]);
        let n = values.len();
        let out = self.push(values, vec![n], self.needs_any(&[a, b]));
        self.nodes.push(Node::Concat { a, b, out });
        Ok(out)
    }

    /// Contiguous sub-range `[start, start+len)` of a vector.
    pub fn slice(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        if self.shapes[x.0].len() != 1 {
            return Err(EngineError::dim("slice", "input must be a vector".to_string()));
        }
        let total = self.vals[x.0].len();
        if start + len > total {
            return Err(EngineError::Index { op: "slice", index: start + len, bound: total });
        }
        let values = self.vals[x.0][start..start + len].to_vec();
        let out = self.push(values, vec![len], self.needs[x.0]);
        self.nodes.push(Node::Slice { x, start, out });
        Ok(out)
    }

    /// Numerically stable softmax over a vector.
    pub fn softmax(&mut self, x: Var) -> Result<Var> {
        if self.shapes[x.0].len() != 1 || self.vals[x.0].is_empty() {
            return Err(EngineError::dim("softmax", "input must be a non-empty vector".to_string()));
        }
        let xv = &self.vals[x.0];
        let mut max = xv[0];
        for v in &xv[1..] {
            if *v > max {
                max = *v;
            }
        }
        let exps: Vec<F> = xv.iter().map(|v| (*v - max).exp()).collect();
        let mut total = F::zero();
        for e in &exps {
            total += *e;
        }
        let values: Vec<F> = exps.iter().map(|e| *e / total).collect();
        let out = self.push(values, self.shapes[x.0].clone(), self.needs[x.0]);
        self.nodes.push(Node::Softmax { x, out });
        Ok(out)
    }

    /// Inverted dropout. In training mode each element is zeroed with
    /// probability `rate` and survivors are scaled by `1/(1-rate)`; in
    /// evaluation mode (or at rate 0) this is the identity.
    pub fn dropout(&mut self, x: Var, rate: f64, training: bool, rng: &mut dyn RngCore) -> Result<Var> {
        if !(0.0..1.0).contains(&rate) {
            return Err(EngineError::Contract(format!("dropout rate {rate} outside [0, 1)")));
        }
        if !training || rate == 0.0 {
            return Ok(x);
        }
        let keep_scale = F::from_f64_c(1.0 / (1.0 - rate));
        let mask: Vec<F> = self.vals[x.0]
            .iter()
            .map(|_| {
                if uniform_f64(rng) < rate {
                    F::zero()
                } else {
                    keep_scale
                }
            })
            .collect();
        let values: Vec<F> = self.vals[x.0].iter().zip(&mask).map(|(v, m)| *v * *m).collect();
        let out = self.push(values, self.shapes[x.0].clone(), self.needs[x.0]);
        self.nodes.push(Node::Dropout { x, mask, out });
        Ok(out)
    }

    /// Weighted sum of table rows: `out = Σ_i weights[i] · table[i, :]`.
    pub fn weighted_row_sum(&mut self, weights: Var, table: Var) -> Result<Var> {
        let tshape = &self.shapes[table.0];
        if tshape.len() != 2 {
            return Err(EngineError::dim("weighted_row_sum", format!("table rank {} != 2", tshape.len())));
        }
        let (rows, cols) = (tshape[0], tshape[1]);
        if self.shapes[weights.0] != [rows] {
            return Err(EngineError::dim(
                "weighted_row_sum",
                format!("weights {:?} vs {rows} table rows", self.shapes[weights.0]),
            ));
        }
        let wv = &self.vals[weights.0];
        let tv = &self.vals[table.0];
        let mut values = vec![F::zero(); cols];
        for i in 0..rows {
            let row = &tv[i * cols..(i + 1) * cols];
            let wi = wv[i];
            for (acc, t) in values.iter_mut().zip(row) {
                *acc += wi * *t;
            }
        }
        let out = self.push(values, vec![cols], self.needs_any(&[weights, table]));
        self.nodes.push(Node::WeightedRowSum { weights, table, out, rows, cols });
        Ok(out)
    }

    /// Positive binary cross entropy `-Σ (y·ln ŷ + (1-y)·ln(1-ŷ))` with
    /// predictions clamped to `[1e-7, 1-1e-7]` before the logs.
    pub fn bce_loss(&mut self, yhat: Var, targets: &[F]) -> Result<Var> {
        if self.vals[yhat.0].len() != targets.len() {
            return Err(EngineError::dim(
                "bce_loss",
                format!("{} predictions vs {} targets", self.vals[yhat.0].len(), targets.len()),
            ));
        }
        let lo = F::from_f64_c(BCE_CLAMP);
        let hi = F::one() - lo;
        let mut total = F::zero();
        for (p, y) in self.vals[yhat.0].iter().zip(targets) {
            let pc = clamp(*p, lo, hi);
            total += -(*y * pc.ln() + (F::one() - *y) * (F::one() - pc).ln());
        }
        let out = self.push(vec![total], vec![], self.needs[yhat.0]);
        self.nodes.push(Node::Bce { yhat, targets: targets.to_vec(), out });
        Ok(out)
    }

    /// Sum of squared differences `Σ (y_i - x_i)²`.
    pub fn squared_error_loss(&mut self, x: Var, targets: &[F]) -> Result<Var> {
        if self.vals[x.0].len() != targets.len() {
            return Err(EngineError::dim(
                "squared_error_loss",
                format!("{} values vs {} targets", self.vals[x.0].len(), targets.len()),
            ));
        }
        let mut total = F::zero();
        for (w, y) in self.vals[x.0].iter().zip(targets) {
            let d = *y - *w;
            total += d * d;
        }
        let out = self.push(vec![total], vec![], self.needs[x.0]);
        self.nodes.push(Node::SqErr { x, targets: targets.to_vec(), out });
        Ok(out)
    }

    /// Standard LSTM cell (gates ordered i, f, g, o in the stacked weights).
    ///
    /// `x: [d]`, `h_cat: [2d]` (previous hidden state concatenated with the
    /// read vector), `c: [d]`; `w_gate: [4d × d]`, `u_gate: [4d × 2d]`,
    /// `bias: [4d]`. Returns `(h_out, c_out)`.
    pub fn lstm_cell(
        &mut self,
        x: Var,
        h_cat: Var,
        c: Var,
        w_gate: Var,
        u_gate: Var,
        bias: Var,
    ) -> Result<(Var, Var)> {
        let d = self.vals[c.0].len();
        if self.shapes[x.0] != [d] {
            return Err(EngineError::dim("lstm_cell", format!("x {:?} vs state dim {d}", self.shapes[x.0])));
        }
        if self.shapes[h_cat.0] != [2 * d] {
            return Err(EngineError::dim(
                "lstm_cell",
                format!("h_cat {:?}, expected [{}]", self.shapes[h_cat.0], 2 * d),
            ));
        }
        if self.shapes[w_gate.0] != [4 * d, d]
            || self.shapes[u_gate.0] != [4 * d, 2 * d]
            || self.shapes[bias.0] != [4 * d]
        {
            return Err(EngineError::dim("lstm_cell", "gate weight shapes do not match state dim".to_string()));
        }
        let wx = self.matvec(w_gate, x)?;
        let uh = self.matvec(u_gate, h_cat)?;
        let pre = self.add(wx, uh)?;
        let pre = self.add(pre, bias)?;
        let i_gate = self.slice(pre, 0, d)?;
        let i_gate = self.sigmoid(i_gate);
        let f_gate = self.slice(pre, d, d)?;
        let f_gate = self.sigmoid(f_gate);
        let g_gate = self.slice(pre, 2 * d, d)?;
        let g_gate = self.tanh(g_gate);
        let o_gate = self.slice(pre, 3 * d, d)?;
        let o_gate = self.sigmoid(o_gate);
        let fc = self.mul(f_gate, c)?;
        let ig = self.mul(i_gate, g_gate)?;
        let c_out = self.add(fc, ig)?;
        let c_tanh = self.tanh(c_out);
        let h_out = self.mul(o_gate, c_tanh)?;
        Ok((h_out, c_out))
    }

    // ---- backward ----

    /// Reverse replay from a scalar loss. Gradients for every var that
    /// requires them accumulate additively into the tape.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.vals[loss.0].len() != 1 {
            return Err(EngineError::Contract(format!(
                "backward requires a scalar loss, got shape {:?}",
                self.shapes[loss.0]
            )));
        }
        let mut adj: Vec<Option<Vec<F>>> = vec![None; self.vals.len()];
        adj[loss.0] = Some(vec![F::one()]);
        for node in self.nodes.iter().rev() {
            backprop(node, &self.vals, &self.needs, &mut adj);
        }
        for (i, contribution) in adj.into_iter().enumerate() {
            if !self.needs[i] {
                continue;
            }
            if let Some(c) = contribution {
                match &mut self.grads[i] {
                    Some(g) => {
                        for (gi, ci) in g.iter_mut().zip(&c) {
                            *gi += *ci;
                        }
                    }
                    None => self.grads[i] = Some(c),
                }
            }
        }
        Ok(())
    }
}

fn clamp<F: Element>(v: F, lo: F, hi: F) -> F {
    if v < lo {
        lo
    } else if v > hi {
        hi
    } else {
        v
    }
}

/// Output positions `[t_lo, t_hi)` for which kernel offset `o` reads a valid
/// input position under same-padding.
fn conv_span(len: usize, o: usize, pad: usize) -> (usize, usize) {
    let shift = o as isize - pad as isize;
    let t_lo = if shift < 0 { (-shift) as usize } else { 0 };
    let t_hi = if shift > 0 { len - shift as usize } else { len };
    (t_lo, t_hi)
}

/// Norms and similarity used by both the forward and backward cosine rules.
/// Returns `(cosine, norm_u, norm_v, clamped_u, clamped_v)`.
fn cosine_parts<F: Element>(u: &[F], v: &[F]) -> (F, F, F, F, F) {
    let floor = F::from_f64_c(COSINE_NORM_FLOOR);
    let mut dot = F::zero();
    let mut nu = F::zero();
    let mut nv = F::zero();
    for (a, b) in u.iter().zip(v) {
        dot += *a * *b;
        nu += *a * *a;
        nv += *b * *b;
    }
    let nu = nu.sqrt();
    let nv = nv.sqrt();
    let cu = if nu > floor { nu } else { floor };
    let cv = if nv > floor { nv } else { floor };
    (dot / (cu * cv), nu, nv, cu, cv)
}

fn add_into<F: Element>(adj: &mut Vec<Option<Vec<F>>>, var: Var, size: usize, f: impl FnOnce(&mut [F])) {
    let slot = &mut adj[var.0];
    if slot.is_none() {
        *slot = Some(vec![F::zero(); size]);
    }
    f(slot.as_mut().expect("just initialized"));
}

/// Propagates the adjoint of one node's output into its inputs.
fn backprop<F: Element>(node: &Node<F>, vals: &[Vec<F>], needs: &[bool], adj: &mut Vec<Option<Vec<F>>>) {
    // Each arm reads the output adjoint; absent adjoints mean no gradient
    // flows through this node.
    macro_rules! out_adj {
        ($out:expr) => {
            match adj[$out.0].as_ref() {
                Some(a) => a.clone(),
                None => return,
            }
        };
    }
    match node {
        Node::Add { a, b, out } => {
            let d = out_adj!(out);
            if needs[a.0] {
                add_into(adj, *a, d.len(), |g| {
                    for (gi, di) in g.iter_mut().zip(&d) {
                        *gi += *di;
                    }
                });
            }
            if needs[b.0] {
                add_into(adj, *b, d.len(), |g| {
                    for (gi, di) in g.iter_mut().zip(&d) {
                        *gi += *di;
                    }
                });
            }
        }
        Node::Mul { a, b, out } => {
            let d = out_adj!(out);
            if needs[a.0] {
                let bv = &vals[b.0];
                add_into(adj, *a, d.len(), |g| {
                    for i in 0..d.len() {
                        g[i] += d[i] * bv[i];
                    }
                });
            }
            if needs[b.0] {
                let av = &vals[a.0];
                add_into(adj, *b, d.len(), |g| {
                    for i in 0..d.len() {
                        g[i] += d[i] * av[i];
                    }
                });
            }
        }
        Node::Scale { x, factor, out } => {
            let d = out_adj!(out);
            if needs[x.0] {
                add_into(adj, *x, d.len(), |g| {
                    for i in 0..d.len() {
                        g[i] += d[i] * *factor;
                    }
                });
            }
        }
        Node::Relu { x, out } => {
            let d = out_adj!(out);
            if needs[x.0] {
                let xv = &vals[x.0];
                add_into(adj, *x, d.len(), |g| {
                    for i in 0..d.len() {
                        if xv[i] > F::zero() {
                            g[i] += d[i];
                        }
                    }
                });
            }
        }
        Node::Sigmoid { x, out } => {
            let d = out_adj!(out);
            if needs[x.0] {
                let yv = &vals[out.0];
                add_into(adj, *x, d.len(), |g| {
                    for i in 0..d.len() {
                        g[i] += d[i] * yv[i] * (F::one() - yv[i]);
                    }
                });
            }
        }
        Node::Tanh { x, out } => {
            let d = out_adj!(out);
            if needs[x.0] {
                let yv = &vals[out.0];
                add_into(adj, *x, d.len(), |g| {
                    for i in 0..d.len() {
                        g[i] += d[i] * (F::one() - yv[i] * yv[i]);
                    }
                });
            }
        }
        Node::Sum { x, out } => {
            let d = out_adj!(out)[0];
            if needs[x.0] {
                let n = vals[x.0].len();
                add_into(adj, *x, n, |g| {
                    for gi in g.iter_mut() {
                        *gi += d;
                    }
                });
            }
        }
        Node::MatVec { w, x, out, rows, cols } => {
            let d = out_adj!(out);
            if needs[w.0] {
                let xv = &vals[x.0];
                add_into(adj, *w, rows * cols, |g| {
                    for i in 0..*rows {
                        let di = d[i];
                        let grow = &mut g[i * cols..(i + 1) * cols];
                        for j in 0..*cols {
                            grow[j] += di * xv[j];
                        }
                    }
                });
            }
            if needs[x.0] {
                let wv = &vals[w.0];
                add_into(adj, *x, *cols, |g| {
                    for i in 0..*rows {
                        let di = d[i];
                        let wrow = &wv[i * cols..(i + 1) * cols];
                        for j in 0..*cols {
                            g[j] += di * wrow[j];
                        }
                    }
                });
            }
        }
        Node::Conv1d { input, kernels, bias, out, c_in, c_out, len, width } => {
            let d = out_adj!(out);
            let pad = (width - 1) / 2;
            if needs[bias.0] {
                add_into(adj, *bias, *c_out, |g| {
                    for j in 0..*c_out {
                        let drow = &d[j * len..(j + 1) * len];
                        let mut acc = F::zero();
                        for v in drow {
                            acc += *v;
                        }
                        g[j] += acc;
                    }
                });
            }
            if needs[kernels.0] {
                let xv = &vals[input.0];
                add_into(adj, *kernels, c_out * c_in * width, |g| {
                    for j in 0..*c_out {
                        let drow = &d[j * len..(j + 1) * len];
                        for c in 0..*c_in {
                            let x_row = &xv[c * len..(c + 1) * len];
                            for o in 0..*width {
                                let (t_lo, t_hi) = conv_span(*len, o, pad);
                                let shift = o as isize - pad as isize;
                                let mut acc = F::zero();
                                for t in t_lo..t_hi {
                                    acc += drow[t] * x_row[(t as isize + shift) as usize];
                                }
                                g[(j * c_in + c) * width + o] += acc;
                            }
                        }
                    }
                });
            }
            if needs[input.0] {
                let kv = &vals[kernels.0];
                add_into(adj, *input, c_in * len, |g| {
                    for j in 0..*c_out {
                        let drow = &d[j * len..(j + 1) * len];
                        for c in 0..*c_in {
                            let g_row = &mut g[c * len..(c + 1) * len];
                            for o in 0..*width {
                                let k = kv[(j * c_in + c) * width + o];
                                let (t_lo, t_hi) = conv_span(*len, o, pad);
                                let shift = o as isize - pad as isize;
                                for t in t_lo..t_hi {
                                    g_row[(t as isize + shift) as usize] += drow[t] * k;
                                }
                            }
                        }
                    }
                });
            }
        }
        Node::GlobalMaxPool { x, out, argmax, len } => {
            let d = out_adj!(out);
            if needs[x.0] {
                let channels = argmax.len();
                add_into(adj, *x, channels * len, |g| {
                    for c in 0..channels {
                        g[c * len + argmax[c]] += d[c];
                    }
                });
            }
        }
        Node::LookupRow { table, row, out, cols } => {
            let d = out_adj!(out);
            if needs[table.0] {
                let rows = vals[table.0].len() / cols;
                add_into(adj, *table, rows * cols, |g| {
                    let grow = &mut g[row * cols..(row + 1) * cols];
                    for j in 0..*cols {
                        grow[j] += d[j];
                    }
                });
            }
        }
        Node::Cosine { u, v, out } => {
            let d = out_adj!(out)[0];
            let floor = F::from_f64_c(COSINE_NORM_FLOOR);
            let (c, nu, nv, cu, cv) = cosine_parts(&vals[u.0], &vals[v.0]);
            if needs[u.0] {
                let uv = &vals[u.0];
                let vv = &vals[v.0];
                let above = nu > floor;
                add_into(adj, *u, uv.len(), |g| {
                    for i in 0..g.len() {
                        let mut t = vv[i] / (cu * cv);
                        if above {
                            t = t - c * uv[i] / (cu * cu);
                        }
                        g[i] += d * t;
                    }
                });
            }
            if needs[v.0] {
                let uv = &vals[u.0];
                let vv = &vals[v.0];
                let above = nv > floor;
                add_into(adj, *v, vv.len(), |g| {
                    for i in 0..g.len() {
                        let mut t = uv[i] / (cu * cv);
                        if above {
                            t = t - c * vv[i] / (cv * cv);
                        }
                        g[i] += d * t;
                    }
                });
            }
        }
        Node::Stack { xs, out } => {
            let d = out_adj!(out);
            for (i, x) in xs.iter().enumerate() {
                if needs[x.0] {
                    let di = d[i];
                    add_into(adj, *x, 1, |g| g[0] += di);
                }
            }
        }
        Node::Concat { a, b, out } => {
            let d = out_adj!(out);
            let na = vals[a.0].len();
            if needs[a.0] {
                add_into(adj, *a, na, |g| {
                    for i in 0..na {
                        g[i] += d[i];
                    }
                });
            }
            if needs[b.0] {
                let nb = vals[b.0].len();
                add_into(adj, *b, nb, |g| {
                    for i in 0..nb {
                        g[i] += d[na + i];
                    }
                });
            }
        }
        Node::Slice { x, start, out } => {
            let d = out_adj!(out);
            if needs[x.0] {
                let n = vals[x.0].len();
                add_into(adj, *x, n, |g| {
                    for i in 0..d.len() {
                        g[start + i] += d[i];
                    }
                });
            }
        }
        Node::Softmax { x, out } => {
            let d = out_adj!(out);
            if needs[x.0] {
                let yv = &vals[out.0];
                let mut dot = F::zero();
                for i in 0..d.len() {
                    dot += d[i] * yv[i];
                }
                add_into(adj, *x, d.len(), |g| {
                    for i in 0..d.len() {
                        g[i] += yv[i] * (d[i] - dot);
                    }
                });
            }
        }
        Node::Dropout { x, mask, out } => {
            let d = out_adj!(out);
            if needs[x.0] {
                add_into(adj, *x, d.len(), |g| {
                    for i in 0..d.len() {
                        g[i] += d[i] * mask[i];
                    }
                });
            }
        }
        Node::WeightedRowSum { weights, table, out, rows, cols } => {
            let d = out_adj!(out);
            if needs[weights.0] {
                let tv = &vals[table.0];
                add_into(adj, *weights, *rows, |g| {
                    for i in 0..*rows {
                        let row = &tv[i * cols..(i + 1) * cols];
                        let mut acc = F::zero();
                        for j in 0..*cols {
                            acc += d[j] * row[j];
                        }
                        g[i] += acc;
                    }
                });
            }
            if needs[table.0] {
                let wv = &vals[weights.0];
                add_into(adj, *table, rows * cols, |g| {
                    for i in 0..*rows {
                        let wi = wv[i];
                        let grow = &mut g[i * cols..(i + 1) * cols];
                        for j in 0..*cols {
                            grow[j] += wi * d[j];
                        }
                    }
                });
            }
        }
        Node::Bce { yhat, targets, out } => {
            let d = out_adj!(out)[0];
            if needs[yhat.0] {
                let pv = &vals[yhat.0];
                let lo = F::from_f64_c(BCE_CLAMP);
                let hi = F::one() - lo;
                add_into(adj, *yhat, pv.len(), |g| {
                    for i in 0..g.len() {
                        let p = pv[i];
                        // clamped regions contribute no gradient
                        if p > lo && p < hi {
                            g[i] += d * (p - targets[i]) / (p * (F::one() - p));
                        }
                    }
                });
            }
        }
        Node::SqErr { x, targets, out } => {
            let d = out_adj!(out)[0];
            if needs[x.0] {
                let wv = &vals[x.0];
                let two = F::from_f64_c(2.0);
                add_into(adj, *x, wv.len(), |g| {
                    for i in 0..g.len() {
                        g[i] += d * two * (wv[i] - targets[i]);
                    }
                });
            }
        }
    }
}
