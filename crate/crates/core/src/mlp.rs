//! Fully connected networks: the composition of affine maps and elementwise
//! nonlinearities, `F(x) = act_out(W_{L+1} act_L(... act_1(W_1 x + b_1) ...) + b_{L+1})`.
//!
//! With no hidden layers the model is linear regression (identity output) or
//! logistic/softmax regression (classification output).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::activation::{softmax_rows, Activation};
use crate::error::ShapeError;
use crate::loss::{loss_slices, output_delta, Task};
use crate::network::{dense_backward, dense_forward, glorot_fill, ModelParams, Network};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LayerSpec {
    pub width: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(width: usize, activation: Activation) -> Self {
        Self { width, activation }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArchitectureSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    pub hidden: Vec<LayerSpec>,
    pub task: Task,
}

impl ArchitectureSpec {
    pub fn new(input_dim: usize, output_dim: usize, hidden: Vec<LayerSpec>, task: Task) -> Result<Self, ShapeError> {
        let arch = Self { input_dim, output_dim, hidden, task };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<(), ShapeError> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(ShapeError::new("input and output dimensions must be positive".to_string()));
        }
        if self.task == Task::Classification && self.output_dim < 2 {
            return Err(ShapeError::new("classification needs at least two output classes".to_string()));
        }
        for (i, layer) in self.hidden.iter().enumerate() {
            if layer.width == 0 {
                return Err(ShapeError::new(format!("hidden layer {} has zero width", i + 1)));
            }
            if !layer.activation.is_hidden() {
                return Err(ShapeError::new(format!("hidden layer {} uses output activation {}", i + 1, layer.activation)));
            }
        }
        Ok(())
    }

    /// Number of hidden layers.
    pub fn depth(&self) -> usize {
        self.hidden.len()
    }

    /// Layer widths `p_0 = input_dim, p_1, ..., p_L, p_{L+1} = output_dim`.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden.len() + 2);
        w.push(self.input_dim);
        w.extend(self.hidden.iter().map(|l| l.width));
        w.push(self.output_dim);
        w
    }

    fn activations(&self) -> impl Iterator<Item = Activation> + '_ {
        self.hidden.iter().map(|l| l.activation).chain(std::iter::once(self.task.output_activation()))
    }
}

/// Number of trainable values. Without biases this is the sum of
/// `p_l * p_{l-1}` over all `L + 1` weight matrices.
pub fn param_count(arch: &ArchitectureSpec, include_bias: bool) -> usize {
    let widths = arch.widths();
    widths.windows(2).map(|w| w[1] * w[0] + if include_bias { w[1] } else { 0 }).sum()
}

impl Network for ArchitectureSpec {
    fn task(&self) -> Task {
        self.task
    }

    fn input_len(&self) -> usize {
        self.input_dim
    }

    fn output_dim(&self) -> usize {
        self.output_dim
    }

    fn param_shapes(&self) -> Vec<Vec<usize>> {
        self.widths().windows(2).flat_map(|w| [vec![w[1], w[0]], vec![w[1]]]).collect()
    }

    fn init_params(&self, seed: u64) -> ModelParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ModelParams::zeros(self.param_shapes());
        for (l, w) in self.widths().windows(2).enumerate() {
            glorot_fill(params.block_mut(2 * l), w[0], w[1], &mut rng);
        }
        params
    }

    fn forward_rows(&self, params: &ModelParams, x: &[f64], rows: usize, _dropout: Option<&mut ChaCha8Rng>) -> Vec<f64> {
        let mut input = x.to_vec();
        let mut z = Vec::new();
        for (l, act) in self.activations().enumerate() {
            dense_forward(&input, rows, params.block(2 * l), params.block(2 * l + 1), &mut z);
            if act == Activation::Softmax {
                softmax_rows(&mut z, self.output_dim);
            } else {
                for v in z.iter_mut() {
                    *v = act.apply(*v);
                }
            }
            std::mem::swap(&mut input, &mut z);
        }
        input
    }

    fn loss_and_grad(
        &self,
        params: &ModelParams,
        x: &[f64],
        y: &[f64],
        rows: usize,
        _dropout: Option<&mut ChaCha8Rng>,
    ) -> (f64, ModelParams) {
        let acts: Vec<Activation> = self.activations().collect();
        let n_layers = acts.len();
        // inputs[l] feeds layer l; pre[l] is its pre-activation.
        let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(n_layers + 1);
        let mut pre: Vec<Vec<f64>> = Vec::with_capacity(n_layers);
        inputs.push(x.to_vec());
        for (l, &act) in acts.iter().enumerate() {
            let mut z = Vec::new();
            dense_forward(&inputs[l], rows, params.block(2 * l), params.block(2 * l + 1), &mut z);
            let mut a = z.clone();
            if act == Activation::Softmax {
                softmax_rows(&mut a, self.output_dim);
            } else {
                for v in a.iter_mut() {
                    *v = act.apply(*v);
                }
            }
            pre.push(z);
            inputs.push(a);
        }
        let output = &inputs[n_layers];
        let loss = loss_slices(self.task, output, y, rows);

        let mut grads = ModelParams::zeros(self.param_shapes());
        // identity/softmax output: delta w.r.t. the output pre-activation is fused with the loss
        let mut delta = output_delta(self.task, output, y, rows);
        for l in (0..n_layers).rev() {
            if l + 1 < n_layers {
                let act = acts[l];
                for ((d, &z), &a) in delta.iter_mut().zip(&pre[l]).zip(&inputs[l + 1]) {
                    *d *= act.derivative(z, a);
                }
            }
            let (gw, gb) = grads.pair_mut(2 * l);
            let upstream = dense_backward(&inputs[l], rows, params.block(2 * l), &delta, gw, gb, l > 0);
            if let Some(up) = upstream {
                delta = up;
            }
        }
        (loss, grads)
    }
}
