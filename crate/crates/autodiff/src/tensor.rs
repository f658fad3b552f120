use crate::element::Element;
use crate::error::EngineError;
use crate::Result;

/// Dense real-valued multi-dimensional array with optional gradient tracking.
///
/// A scalar has the empty shape `[]`. The gradient buffer exists exactly when
/// the tensor requires gradients, and always mirrors the value shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<F: Element> {
    shape: Vec<usize>,
    values: Vec<F>,
    grad: Option<Vec<F>>,
}

impl<F: Element> Tensor<F> {
    /// Builds a tensor from raw values, validating the element count.
    pub fn new(shape: Vec<usize>, values: Vec<F>, requires_grad: bool) -> Result<Self> {
        let expect: usize = shape.iter().product();
        if expect != values.len() {
            return Err(EngineError::dim(
                "tensor",
                format!("shape {:?} needs {} elements, got {}", shape, expect, values.len()),
            ));
        }
        let grad = requires_grad.then(|| vec![F::zero(); values.len()]);
        Ok(Tensor { shape, values, grad })
    }

    /// All-zero tensor of the given shape.
    pub fn zeros(shape: Vec<usize>, requires_grad: bool) -> Self {
        let n: usize = shape.iter().product();
        let grad = requires_grad.then(|| vec![F::zero(); n]);
        Tensor {
            shape,
            values: vec![F::zero(); n],
            grad,
        }
    }

    /// Scalar tensor (empty shape, one element).
    pub fn scalar(value: F) -> Self {
        Tensor {
            shape: vec![],
            values: vec![value],
            grad: None,
        }
    }

    /// 1-D tensor from a slice.
    pub fn vector(values: &[F], requires_grad: bool) -> Self {
        Tensor::new(vec![values.len()], values.to_vec(), requires_grad)
            .expect("vector shape always consistent")
    }

    /// Row-major matrix from a flat slice.
    pub fn matrix(rows: usize, cols: usize, values: &[F], requires_grad: bool) -> Result<Self> {
        Tensor::new(vec![rows, cols], values.to_vec(), requires_grad)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [F] {
        &mut self.values
    }

    pub fn requires_grad(&self) -> bool {
        self.grad.is_some()
    }

    /// Gradient buffer; `None` when the tensor does not track gradients.
    pub fn grad(&self) -> Option<&[F]> {
        self.grad.as_deref()
    }

    /// Adds `delta` into the gradient buffer elementwise.
    pub fn accumulate_grad(&mut self, delta: &[F]) -> Result<()> {
        let grad = self.grad.as_mut().ok_or_else(|| {
            EngineError::Contract("accumulate_grad on tensor without gradient tracking".into())
        })?;
        if grad.len() != delta.len() {
            return Err(EngineError::dim(
                "accumulate_grad",
                format!("gradient has {} elements, delta {}", grad.len(), delta.len()),
            ));
        }
        for (g, d) in grad.iter_mut().zip(delta) {
            *g += *d;
        }
        Ok(())
    }

    /// Resets the gradient buffer to zero (no-op without tracking).
    pub fn zero_grad(&mut self) {
        if let Some(g) = self.grad.as_mut() {
            for v in g.iter_mut() {
                *v = F::zero();
            }
        }
    }

    /// True when every value element is finite.
    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Copy with the element type widened or narrowed through `f64`.
    pub fn cast<G: Element>(&self) -> Tensor<G> {
        let values: Vec<G> = self.values.iter().map(|v| G::from_f64_c(v.to_f64_c())).collect();
        let grad = self
            .grad
            .as_ref()
            .map(|g| g.iter().map(|v| G::from_f64_c(v.to_f64_c())).collect());
        Tensor {
            shape: self.shape.clone(),
            values,
            grad,
        }
    }
}
