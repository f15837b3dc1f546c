//! The interface shared by the dense and convolutional model families.

use rand::Rng as _;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ShapeError;
use crate::loss::Task;
use crate::tensor::Tensor;

/// All trainable values of a model in one flat buffer, split into shaped blocks.
///
/// Gradients use the same type and layout as the parameters they belong to,
/// so optimizers can work on the flat slice directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    shapes: Vec<Vec<usize>>,
    offsets: Vec<usize>,
    data: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(shapes: Vec<Vec<usize>>) -> Self {
        let mut offsets = Vec::with_capacity(shapes.len());
        let mut total = 0;
        for s in &shapes {
            offsets.push(total);
            total += s.iter().product::<usize>();
        }
        Self { shapes, offsets, data: vec![0.0; total] }
    }

    pub fn from_tensors(tensors: Vec<Tensor>) -> Self {
        let shapes = tensors.iter().map(|t| t.shape().to_vec()).collect();
        let mut p = Self::zeros(shapes);
        let mut pos = 0;
        for t in tensors {
            p.data[pos..pos + t.len()].copy_from_slice(t.data());
            pos += t.len();
        }
        p
    }

    pub fn num_blocks(&self) -> usize {
        self.shapes.len()
    }

    pub fn shape(&self, block: usize) -> &[usize] {
        &self.shapes[block]
    }

    pub fn shapes(&self) -> &[Vec<usize>] {
        &self.shapes
    }

    pub fn block(&self, block: usize) -> &[f64] {
        let start = self.offsets[block];
        &self.data[start..start + self.shapes[block].iter().product::<usize>()]
    }

    pub fn block_mut(&mut self, block: usize) -> &mut [f64] {
        let start = self.offsets[block];
        let len = self.shapes[block].iter().product::<usize>();
        &mut self.data[start..start + len]
    }

    /// Mutable views of two adjacent blocks, typically a weight matrix and its bias.
    pub fn pair_mut(&mut self, first: usize) -> (&mut [f64], &mut [f64]) {
        let start = self.offsets[first];
        let len_a: usize = self.shapes[first].iter().product();
        let len_b: usize = self.shapes[first + 1].iter().product();
        self.data[start..start + len_a + len_b].split_at_mut(len_a)
    }

    pub fn tensor(&self, block: usize) -> Tensor {
        Tensor::new(self.shapes[block].clone(), self.block(block).to_vec()).expect("block length matches its shape")
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn same_layout(&self, other: &ModelParams) -> bool {
        self.shapes == other.shapes
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// A differentiable model family: architecture descriptions implement this.
pub trait Network: Clone + Send + Sync + std::fmt::Debug {
    fn task(&self) -> Task;

    /// Length of one flattened input row.
    fn input_len(&self) -> usize;

    fn output_dim(&self) -> usize;

    /// Block shapes of [`ModelParams`] for this architecture, in storage order.
    fn param_shapes(&self) -> Vec<Vec<usize>>;

    /// Glorot-uniform weights and zero biases, fully determined by `seed`.
    fn init_params(&self, seed: u64) -> ModelParams;

    /// Evaluates `rows` flattened inputs. Outputs pass through the task's
    /// output activation. `dropout` is `Some` only while training.
    fn forward_rows(&self, params: &ModelParams, x: &[f64], rows: usize, dropout: Option<&mut ChaCha8Rng>) -> Vec<f64>;

    /// Mean batch loss and its gradient with respect to every parameter.
    /// `y` holds `rows * output_dim` targets (one-hot rows for classification).
    fn loss_and_grad(
        &self,
        params: &ModelParams,
        x: &[f64],
        y: &[f64],
        rows: usize,
        dropout: Option<&mut ChaCha8Rng>,
    ) -> (f64, ModelParams);

    /// Deterministic inference on a tensor of one row or a batch of rows.
    fn forward(&self, params: &ModelParams, x: &Tensor) -> Result<Tensor, ShapeError> {
        check_params(self, params)?;
        if x.row_len() != self.input_len() {
            return Err(ShapeError::new(format!("input rows have length {}, architecture expects {}", x.row_len(), self.input_len())));
        }
        let rows = x.rows();
        let out = self.forward_rows(params, x.data(), rows, None);
        let shape = if x.shape().len() <= 1 { vec![self.output_dim()] } else { vec![rows, self.output_dim()] };
        Tensor::new(shape, out)
    }

    /// Gradient of the mean loss over a batch, without dropout.
    fn grad(&self, params: &ModelParams, x: &Tensor, y: &Tensor) -> Result<ModelParams, ShapeError> {
        check_params(self, params)?;
        if x.row_len() != self.input_len() || y.row_len() != self.output_dim() || x.rows() != y.rows() {
            return Err(ShapeError::new(format!("batch shapes {:?} / {:?} do not fit the architecture", x.shape(), y.shape())));
        }
        if x.is_empty() {
            return Err(ShapeError::new("empty batch".to_string()));
        }
        Ok(self.loss_and_grad(params, x.data(), y.data(), x.rows(), None).1)
    }
}

fn check_params<N: Network>(net: &N, params: &ModelParams) -> Result<(), ShapeError> {
    if params.shapes() != net.param_shapes().as_slice() {
        return Err(ShapeError::new("parameter layout does not match architecture".to_string()));
    }
    Ok(())
}

/// Fills `out` with Glorot-uniform samples for a layer with the given fans.
pub(crate) fn glorot_fill(out: &mut [f64], fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for v in out {
        *v = rng.random_range(-limit..=limit);
    }
}

/// `out[r, o] = bias[o] + sum_i x[r, i] * w[o, i]`, with `w` stored `outputs x inputs`.
pub(crate) fn dense_forward(x: &[f64], rows: usize, w: &[f64], bias: &[f64], out: &mut Vec<f64>) {
    let outputs = bias.len();
    let inputs = w.len() / outputs.max(1);
    assert!(x.len() >= rows * inputs && w.len() == outputs * inputs);
    out.clear();
    for _ in 0..rows {
        out.extend_from_slice(bias);
    }
    if rows == 0 || inputs == 0 || outputs == 0 {
        return;
    }
    // out += x (rows x inputs) * w^T (inputs x outputs); extents checked above
    unsafe {
        matrixmultiply::dgemm(
            rows,
            inputs,
            outputs,
            1.0,
            x.as_ptr(),
            inputs as isize,
            1,
            w.as_ptr(),
            1,
            inputs as isize,
            1.0,
            out.as_mut_ptr(),
            outputs as isize,
            1,
        );
    }
}

/// Accumulates dense-layer gradients for upstream `delta` (`rows x outputs`) and
/// returns the gradient with respect to the layer input when `want_input` is set.
pub(crate) fn dense_backward(
    x: &[f64],
    rows: usize,
    w: &[f64],
    delta: &[f64],
    grad_w: &mut [f64],
    grad_b: &mut [f64],
    want_input: bool,
) -> Option<Vec<f64>> {
    let outputs = grad_b.len();
    let inputs = w.len() / outputs.max(1);
    assert!(x.len() >= rows * inputs && delta.len() >= rows * outputs && grad_w.len() == outputs * inputs);
    for dr in delta[..rows * outputs].chunks_exact(outputs.max(1)) {
        for (g, d) in grad_b.iter_mut().zip(dr) {
            *g += d;
        }
    }
    if rows == 0 || inputs == 0 || outputs == 0 {
        return want_input.then(|| vec![0.0; rows * inputs]);
    }
    // grad_w += delta^T (outputs x rows) * x (rows x inputs)
    unsafe {
        matrixmultiply::dgemm(
            outputs,
            rows,
            inputs,
            1.0,
            delta.as_ptr(),
            1,
            outputs as isize,
            x.as_ptr(),
            inputs as isize,
            1,
            1.0,
            grad_w.as_mut_ptr(),
            inputs as isize,
            1,
        );
    }
    if !want_input {
        return None;
    }
    // dx = delta (rows x outputs) * w (outputs x inputs)
    let mut dx = vec![0.0; rows * inputs];
    unsafe {
        matrixmultiply::dgemm(
            rows,
            outputs,
            inputs,
            1.0,
            delta.as_ptr(),
            outputs as isize,
            1,
            w.as_ptr(),
            inputs as isize,
            1,
            0.0,
            dx.as_mut_ptr(),
            inputs as isize,
            1,
        );
    }
    Some(dx)
}
