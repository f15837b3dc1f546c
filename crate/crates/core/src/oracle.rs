//! Independent references for testing: finite-difference gradients, random
//! architectures and ordinary least squares.

use rand::Rng;

use crate::activation::Activation;
use crate::conv::{CnnArchitecture, ConvLayerSpec, ImageShape};
use crate::loss::Task;
use crate::mlp::{ArchitectureSpec, LayerSpec};
use crate::network::{ModelParams, Network};

/// Central-difference gradient of the deterministic (no dropout) loss.
pub fn finite_difference_grad<N: Network>(net: &N, params: &ModelParams, x: &[f64], y: &[f64], rows: usize, step: f64) -> ModelParams {
    let mut probe = params.clone();
    let mut grad = ModelParams::zeros(params.shapes().to_vec());
    for i in 0..params.len() {
        let orig = probe.as_slice()[i];
        probe.as_mut_slice()[i] = orig + step;
        let up = net.loss_and_grad(&probe, x, y, rows, None).0;
        probe.as_mut_slice()[i] = orig - step;
        let down = net.loss_and_grad(&probe, x, y, rows, None).0;
        probe.as_mut_slice()[i] = orig;
        grad.as_mut_slice()[i] = (up - down) / (2.0 * step);
    }
    grad
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    /// Largest relative error among components that fail the absolute test.
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    pub failures: usize,
    pub checked: usize,
}

impl GradCheck {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// A component passes when its relative error is below `rel_tol` or its
/// absolute error below `abs_tol`.
#[allow(clippy::too_many_arguments)]
pub fn check_gradient<N: Network>(
    net: &N,
    params: &ModelParams,
    x: &[f64],
    y: &[f64],
    rows: usize,
    step: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> GradCheck {
    let analytic = net.loss_and_grad(params, x, y, rows, None).1;
    let numeric = finite_difference_grad(net, params, x, y, rows, step);
    let mut out = GradCheck { max_rel_error: 0.0, max_abs_error: 0.0, failures: 0, checked: params.len() };
    for (&a, &n) in analytic.as_slice().iter().zip(numeric.as_slice()) {
        let abs = (a - n).abs();
        let scale = a.abs().max(n.abs());
        let rel = if scale > 0.0 { abs / scale } else { 0.0 };
        out.max_abs_error = out.max_abs_error.max(abs);
        if !(rel < rel_tol || abs < abs_tol) {
            out.failures += 1;
            out.max_rel_error = out.max_rel_error.max(rel);
        }
    }
    out
}

/// Adds uniform noise in `[-scale, scale]` to every parameter. Moves a check
/// point off the exact zeros of fresh biases, where ReLU has a kink.
pub fn jitter<R: Rng + ?Sized>(params: &mut ModelParams, rng: &mut R, scale: f64) {
    for v in params.as_mut_slice() {
        *v += rng.random_range(-scale..=scale);
    }
}

fn random_hidden_activation<R: Rng + ?Sized>(rng: &mut R) -> Activation {
    Activation::HIDDEN[rng.random_range(0..Activation::HIDDEN.len())]
}

/// Dense network with up to `max_depth` hidden layers of width `1..=max_width`.
pub fn random_mlp<R: Rng + ?Sized>(
    rng: &mut R,
    input_dim: usize,
    output_dim: usize,
    task: Task,
    max_depth: usize,
    max_width: usize,
) -> ArchitectureSpec {
    let depth = rng.random_range(0..=max_depth);
    let hidden = (0..depth).map(|_| LayerSpec::new(rng.random_range(1..=max_width), random_hidden_activation(rng))).collect();
    ArchitectureSpec::new(input_dim, output_dim, hidden, task).expect("valid random MLP")
}

/// Convolutional network with `1..=max_layers` blocks that keeps the map non-empty.
pub fn random_cnn<R: Rng + ?Sized>(
    rng: &mut R,
    input: ImageShape,
    output_dim: usize,
    task: Task,
    max_layers: usize,
    max_channels: usize,
) -> CnnArchitecture {
    loop {
        let depth = rng.random_range(1..=max_layers);
        let layers: Vec<ConvLayerSpec> = (0..depth)
            .map(|_| ConvLayerSpec {
                channels: rng.random_range(1..=max_channels),
                kernel_size: rng.random_range(2..=5),
                pooling: rng.random_range(1..=2),
                dropout_rate: rng.random_range(0.0..0.9),
                activation: random_hidden_activation(rng),
            })
            .collect();
        if let Ok(arch) = CnnArchitecture::new(input, layers, output_dim, task) {
            return arch;
        }
    }
}

/// Least-squares coefficients `[intercept, b_1, .., b_cols]` for row-major `x`,
/// solved from the normal equations by Gaussian elimination with partial pivoting.
pub fn ols_fit(x: &[f64], cols: usize, y: &[f64]) -> Option<Vec<f64>> {
    let rows = y.len();
    let p = cols + 1;
    let mut a = vec![0.0; p * p];
    let mut b = vec![0.0; p];
    let mut row = vec![0.0; p];
    for r in 0..rows {
        row[0] = 1.0;
        row[1..].copy_from_slice(&x[r * cols..(r + 1) * cols]);
        for i in 0..p {
            b[i] += row[i] * y[r];
            for j in 0..p {
                a[i * p + j] += row[i] * row[j];
            }
        }
    }
    for col in 0..p {
        let pivot = (col..p).max_by(|&i, &j| a[i * p + col].abs().total_cmp(&a[j * p + col].abs()))?;
        if a[pivot * p + col].abs() < 1e-12 {
            return None;
        }
        if pivot != col {
            for j in 0..p {
                a.swap(col * p + j, pivot * p + j);
            }
            b.swap(col, pivot);
        }
        for i in col + 1..p {
            let f = a[i * p + col] / a[col * p + col];
            for j in col..p {
                a[i * p + j] -= f * a[col * p + j];
            }
            b[i] -= f * b[col];
        }
    }
    let mut beta = vec![0.0; p];
    for i in (0..p).rev() {
        let tail: f64 = (i + 1..p).map(|j| a[i * p + j] * beta[j]).sum();
        beta[i] = (b[i] - tail) / a[i * p + i];
    }
    Some(beta)
}

pub fn ols_predict(beta: &[f64], x: &[f64], cols: usize) -> Vec<f64> {
    x.chunks(cols).map(|r| beta[0] + r.iter().zip(&beta[1..]).map(|(a, b)| a * b).sum::<f64>()).collect()
}
