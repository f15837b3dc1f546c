//! Convolutional stacks over HWC images.
//!
//! Each block is conv (stride 1, zero same-padding, cross-correlation) then
//! activation, max pooling and inverted dropout. A single dense layer maps the
//! flattened last block to the task output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::activation::{softmax_rows, Activation};
use crate::error::ShapeError;
use crate::loss::{loss_slices, output_delta, Task};
use crate::network::{dense_backward, dense_forward, glorot_fill, ModelParams, Network};
use crate::tensor::Tensor;

pub const KERNEL_SIZES: std::ops::RangeInclusive<usize> = 2..=5;
pub const POOL_WINDOWS: [usize; 2] = [1, 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvLayerSpec {
    pub channels: usize,
    pub kernel_size: usize,
    /// Max-pooling window; 1 leaves the feature map untouched.
    pub pooling: usize,
    pub dropout_rate: f64,
    pub activation: Activation,
}

/// `(height, width, channels)`.
pub type ImageShape = (usize, usize, usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnArchitecture {
    pub input: ImageShape,
    pub conv_layers: Vec<ConvLayerSpec>,
    pub output_dim: usize,
    pub task: Task,
}

impl CnnArchitecture {
    pub fn new(input: ImageShape, conv_layers: Vec<ConvLayerSpec>, output_dim: usize, task: Task) -> Result<Self, ShapeError> {
        let arch = Self { input, conv_layers, output_dim, task };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<(), ShapeError> {
        let (h, w, c) = self.input;
        if h == 0 || w == 0 || c == 0 || self.output_dim == 0 {
            return Err(ShapeError::new("input and output dimensions must be positive".into()));
        }
        if self.task == Task::Classification && self.output_dim < 2 {
            return Err(ShapeError::new("classification needs at least two output classes".into()));
        }
        for (i, l) in self.conv_layers.iter().enumerate() {
            let n = i + 1;
            if l.channels == 0 {
                return Err(ShapeError::new(format!("conv layer {n} has zero channels")));
            }
            if !KERNEL_SIZES.contains(&l.kernel_size) {
                return Err(ShapeError::new(format!("conv layer {n}: kernel size {} outside 2..=5", l.kernel_size)));
            }
            if !POOL_WINDOWS.contains(&l.pooling) {
                return Err(ShapeError::new(format!("conv layer {n}: pooling {} not in {{1, 2}}", l.pooling)));
            }
            if !(0.0..1.0).contains(&l.dropout_rate) {
                return Err(ShapeError::new(format!("conv layer {n}: dropout rate {} outside [0, 1)", l.dropout_rate)));
            }
            if !l.activation.is_hidden() {
                return Err(ShapeError::new(format!("conv layer {n} uses output activation {}", l.activation)));
            }
        }
        Self::spatial_after(self.input, &self.conv_layers)?;
        Ok(())
    }

    /// Feature-map shape after each block, in order.
    pub fn block_shapes(&self) -> Vec<ImageShape> {
        let mut shapes = Vec::with_capacity(self.conv_layers.len());
        let (mut h, mut w, _) = self.input;
        for l in &self.conv_layers {
            h /= l.pooling;
            w /= l.pooling;
            shapes.push((h, w, l.channels));
        }
        shapes
    }

    /// Spatial size left after every pooling stage, or an error once it hits zero.
    pub fn spatial_after(input: ImageShape, layers: &[ConvLayerSpec]) -> Result<(usize, usize), ShapeError> {
        let (mut h, mut w, _) = input;
        for (i, l) in layers.iter().enumerate() {
            h /= l.pooling.max(1);
            w /= l.pooling.max(1);
            if h == 0 || w == 0 {
                return Err(ShapeError::new(format!("feature map collapses to zero after conv layer {}", i + 1)));
            }
        }
        Ok((h, w))
    }

    pub fn depth(&self) -> usize {
        self.conv_layers.len()
    }

    /// Length of the flattened input to the dense head.
    pub fn flat_len(&self) -> usize {
        let (h, w, c) = self.block_shapes().last().copied().unwrap_or(self.input);
        h * w * c
    }

    fn in_channels(&self, layer: usize) -> usize {
        if layer == 0 {
            self.input.2
        } else {
            self.conv_layers[layer - 1].channels
        }
    }

    fn in_spatial(&self, layer: usize) -> (usize, usize) {
        if layer == 0 {
            (self.input.0, self.input.1)
        } else {
            let (h, w, _) = self.block_shapes()[layer - 1];
            (h, w)
        }
    }
}

/// Same-padded, stride-1 cross-correlation of one HWC map into `out` (`h x w x cout`).
/// Padding before is `(k - 1) / 2`, the remainder goes after.
#[allow(clippy::too_many_arguments)]
fn conv_same(x: &[f64], h: usize, w: usize, cin: usize, kern: &[f64], k: usize, bias: &[f64], out: &mut [f64]) {
    let cout = bias.len();
    let pad = (k - 1) / 2;
    for px in out.chunks_mut(cout) {
        px.copy_from_slice(bias);
    }
    for i in 0..h {
        for j in 0..w {
            let o_base = (i * w + j) * cout;
            for di in 0..k {
                let ii = i + di;
                if ii < pad || ii - pad >= h {
                    continue;
                }
                let ii = ii - pad;
                for dj in 0..k {
                    let jj = j + dj;
                    if jj < pad || jj - pad >= w {
                        continue;
                    }
                    let jj = jj - pad;
                    let xin = &x[(ii * w + jj) * cin..(ii * w + jj + 1) * cin];
                    let kbase = (di * k + dj) * cin * cout;
                    for (c, &xv) in xin.iter().enumerate() {
                        if xv == 0.0 {
                            continue;
                        }
                        let krow = &kern[kbase + c * cout..kbase + (c + 1) * cout];
                        let orow = &mut out[o_base..o_base + cout];
                        for (o, &kv) in orow.iter_mut().zip(krow) {
                            *o += xv * kv;
                        }
                    }
                }
            }
        }
    }
}

/// Backward pass of [`conv_same`] for upstream `dz` (`h x w x cout`).
#[allow(clippy::too_many_arguments)]
fn conv_same_backward(
    x: &[f64],
    h: usize,
    w: usize,
    cin: usize,
    kern: &[f64],
    k: usize,
    cout: usize,
    dz: &[f64],
    grad_k: &mut [f64],
    grad_b: &mut [f64],
    dx: Option<&mut [f64]>,
) {
    let pad = (k - 1) / 2;
    for px in dz.chunks(cout) {
        for (g, d) in grad_b.iter_mut().zip(px) {
            *g += d;
        }
    }
    let mut dx = dx;
    for i in 0..h {
        for j in 0..w {
            let drow = &dz[(i * w + j) * cout..(i * w + j + 1) * cout];
            if drow.iter().all(|&d| d == 0.0) {
                continue;
            }
            for di in 0..k {
                let ii = i + di;
                if ii < pad || ii - pad >= h {
                    continue;
                }
                let ii = ii - pad;
                for dj in 0..k {
                    let jj = j + dj;
                    if jj < pad || jj - pad >= w {
                        continue;
                    }
                    let jj = jj - pad;
                    let xoff = (ii * w + jj) * cin;
                    let kbase = (di * k + dj) * cin * cout;
                    for c in 0..cin {
                        let xv = x[xoff + c];
                        let gk = &mut grad_k[kbase + c * cout..kbase + (c + 1) * cout];
                        for (g, &d) in gk.iter_mut().zip(drow) {
                            *g += xv * d;
                        }
                        if let Some(dx) = dx.as_deref_mut() {
                            let krow = &kern[kbase + c * cout..kbase + (c + 1) * cout];
                            let mut acc = 0.0;
                            for (&kv, &d) in krow.iter().zip(drow) {
                                acc += kv * d;
                            }
                            dx[xoff + c] += acc;
                        }
                    }
                }
            }
        }
    }
}

/// Max pooling with window `win`; returns pooled values and the flat source index of each.
fn maxpool(x: &[f64], h: usize, w: usize, c: usize, win: usize) -> (Vec<f64>, Vec<usize>) {
    let (oh, ow) = (h / win, w / win);
    let mut out = Vec::with_capacity(oh * ow * c);
    let mut arg = Vec::with_capacity(oh * ow * c);
    for i in 0..oh {
        for j in 0..ow {
            for ch in 0..c {
                let mut best_idx = ((i * win) * w + j * win) * c + ch;
                for di in 0..win {
                    for dj in 0..win {
                        let idx = ((i * win + di) * w + j * win + dj) * c + ch;
                        if x[idx] > x[best_idx] {
                            best_idx = idx;
                        }
                    }
                }
                out.push(x[best_idx]);
                arg.push(best_idx);
            }
        }
    }
    (out, arg)
}

fn image_dims(t: &Tensor) -> Result<ImageShape, ShapeError> {
    match *t.shape() {
        [h, w, c] => Ok((h, w, c)),
        [h, w] => Ok((h, w, 1)),
        _ => Err(ShapeError::new(format!("expected an HWC image, got shape {:?}", t.shape()))),
    }
}

/// Applies one same-padded convolution with `kernels` shaped `[k, k, cin, cout]`.
pub fn conv2d_forward(input: &Tensor, kernels: &Tensor, biases: &[f64], activation: Activation) -> Result<Tensor, ShapeError> {
    let (h, w, cin) = image_dims(input)?;
    let (k, kin, cout) = match *kernels.shape() {
        [k1, k2, kin, cout] if k1 == k2 => (k1, kin, cout),
        _ => return Err(ShapeError::new(format!("kernels must be [k, k, cin, cout], got {:?}", kernels.shape()))),
    };
    if kin != cin {
        return Err(ShapeError::new(format!("input has {cin} channels, kernels expect {kin}")));
    }
    if biases.len() != cout {
        return Err(ShapeError::new(format!("{} biases for {cout} kernels", biases.len())));
    }
    if k == 0 {
        return Err(ShapeError::new("empty kernel".into()));
    }
    if activation == Activation::Softmax {
        return Err(ShapeError::new("softmax is not a feature-map activation".into()));
    }
    let mut out = vec![0.0; h * w * cout];
    conv_same(input.data(), h, w, cin, kernels.data(), k, biases, &mut out);
    for v in out.iter_mut() {
        *v = activation.apply(*v);
    }
    Tensor::new(vec![h, w, cout], out)
}

pub fn maxpool_forward(input: &Tensor, window: usize) -> Result<Tensor, ShapeError> {
    let (h, w, c) = image_dims(input)?;
    if !POOL_WINDOWS.contains(&window) {
        return Err(ShapeError::new(format!("pooling window {window} not in {{1, 2}}")));
    }
    if window == 1 {
        return Ok(input.clone());
    }
    if h < window || w < window {
        return Err(ShapeError::new(format!("pooling {h}x{w} by {window} leaves an empty map")));
    }
    let (out, _) = maxpool(input.data(), h, w, c, window);
    Tensor::new(vec![h / window, w / window, c], out)
}

/// Inverted dropout: zero each entry with probability `rate` and scale
/// survivors by `1 / (1 - rate)`. Identity when not training.
pub fn dropout_apply(input: &Tensor, rate: f64, seed: u64, training: bool) -> Result<Tensor, ShapeError> {
    if !(0.0..1.0).contains(&rate) {
        return Err(ShapeError::new(format!("dropout rate {rate} outside [0, 1)")));
    }
    if !training || rate == 0.0 {
        return Ok(input.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keep = 1.0 / (1.0 - rate);
    let mut out = input.clone();
    for v in out.data_mut() {
        *v = if rng.random::<f64>() < rate { 0.0 } else { *v * keep };
    }
    Ok(out)
}

/// Everything one block keeps from the forward pass for backpropagation.
struct BlockCache {
    input: Vec<f64>,
    pre: Vec<f64>,
    act: Vec<f64>,
    pool_arg: Option<Vec<usize>>,
    /// Per-entry dropout multiplier (0 or 1/(1-rate)); `None` when dropout is off.
    mask: Option<Vec<f64>>,
}

impl CnnArchitecture {
    fn output_activation(&self) -> Activation {
        self.task.output_activation()
    }

    /// Runs the conv blocks on one sample, returning the flattened features.
    fn blocks_forward(
        &self,
        params: &ModelParams,
        x: &[f64],
        mut dropout: Option<&mut ChaCha8Rng>,
        mut caches: Option<&mut Vec<BlockCache>>,
    ) -> Vec<f64> {
        let mut cur = x.to_vec();
        for (l, spec) in self.conv_layers.iter().enumerate() {
            let (h, w) = self.in_spatial(l);
            let cin = self.in_channels(l);
            let k = spec.kernel_size;
            let mut pre = vec![0.0; h * w * spec.channels];
            conv_same(&cur, h, w, cin, params.block(2 * l), k, params.block(2 * l + 1), &mut pre);
            let act: Vec<f64> = pre.iter().map(|&z| spec.activation.apply(z)).collect();
            let (mut pooled, pool_arg) = if spec.pooling > 1 {
                let (p, a) = maxpool(&act, h, w, spec.channels, spec.pooling);
                (p, Some(a))
            } else {
                (act.clone(), None)
            };
            let mask = match dropout.as_deref_mut() {
                Some(rng) if spec.dropout_rate > 0.0 => {
                    let keep = 1.0 / (1.0 - spec.dropout_rate);
                    let m: Vec<f64> = pooled.iter().map(|_| if rng.random::<f64>() < spec.dropout_rate { 0.0 } else { keep }).collect();
                    for (v, s) in pooled.iter_mut().zip(&m) {
                        *v *= s;
                    }
                    Some(m)
                }
                _ => None,
            };
            if let Some(c) = caches.as_deref_mut() {
                c.push(BlockCache { input: cur, pre, act, pool_arg, mask });
            }
            cur = pooled;
        }
        cur
    }

    fn blocks_backward(&self, params: &ModelParams, caches: &[BlockCache], d_flat: Vec<f64>, grads: &mut ModelParams) {
        let mut delta = d_flat;
        for l in (0..self.conv_layers.len()).rev() {
            let spec = &self.conv_layers[l];
            let cache = &caches[l];
            if let Some(mask) = &cache.mask {
                for (d, m) in delta.iter_mut().zip(mask) {
                    *d *= m;
                }
            }
            let mut d_act = match &cache.pool_arg {
                Some(arg) => {
                    let mut full = vec![0.0; cache.act.len()];
                    for (&src, &d) in arg.iter().zip(&delta) {
                        full[src] += d;
                    }
                    full
                }
                None => delta,
            };
            for ((d, &z), &a) in d_act.iter_mut().zip(&cache.pre).zip(&cache.act) {
                *d *= spec.activation.derivative(z, a);
            }
            let (h, w) = self.in_spatial(l);
            let cin = self.in_channels(l);
            let mut dx = if l > 0 { Some(vec![0.0; cache.input.len()]) } else { None };
            let (gk, gb) = grads.pair_mut(2 * l);
            conv_same_backward(
                &cache.input,
                h,
                w,
                cin,
                params.block(2 * l),
                spec.kernel_size,
                spec.channels,
                &d_act,
                gk,
                gb,
                dx.as_deref_mut(),
            );
            delta = dx.unwrap_or_default();
        }
    }

    fn head_index(&self) -> usize {
        2 * self.conv_layers.len()
    }
}

impl Network for CnnArchitecture {
    fn task(&self) -> Task {
        self.task
    }

    fn input_len(&self) -> usize {
        self.input.0 * self.input.1 * self.input.2
    }

    fn output_dim(&self) -> usize {
        self.output_dim
    }

    fn param_shapes(&self) -> Vec<Vec<usize>> {
        let mut shapes = Vec::with_capacity(2 * self.conv_layers.len() + 2);
        for (l, spec) in self.conv_layers.iter().enumerate() {
            let k = spec.kernel_size;
            shapes.push(vec![k, k, self.in_channels(l), spec.channels]);
            shapes.push(vec![spec.channels]);
        }
        shapes.push(vec![self.output_dim, self.flat_len()]);
        shapes.push(vec![self.output_dim]);
        shapes
    }

    fn init_params(&self, seed: u64) -> ModelParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ModelParams::zeros(self.param_shapes());
        for (l, spec) in self.conv_layers.iter().enumerate() {
            let area = spec.kernel_size * spec.kernel_size;
            glorot_fill(params.block_mut(2 * l), area * self.in_channels(l), area * spec.channels, &mut rng);
        }
        let head = self.head_index();
        glorot_fill(params.block_mut(head), self.flat_len(), self.output_dim, &mut rng);
        params
    }

    fn forward_rows(&self, params: &ModelParams, x: &[f64], rows: usize, mut dropout: Option<&mut ChaCha8Rng>) -> Vec<f64> {
        let in_len = self.input_len();
        let flat_len = self.flat_len();
        let mut flat = Vec::with_capacity(rows * flat_len);
        for r in 0..rows {
            let f = self.blocks_forward(params, &x[r * in_len..(r + 1) * in_len], dropout.as_deref_mut(), None);
            flat.extend_from_slice(&f);
        }
        let head = self.head_index();
        let mut out = Vec::new();
        dense_forward(&flat, rows, params.block(head), params.block(head + 1), &mut out);
        finish_output(self.output_activation(), &mut out, self.output_dim);
        out
    }

    fn loss_and_grad(
        &self,
        params: &ModelParams,
        x: &[f64],
        y: &[f64],
        rows: usize,
        mut dropout: Option<&mut ChaCha8Rng>,
    ) -> (f64, ModelParams) {
        let in_len = self.input_len();
        let flat_len = self.flat_len();
        let mut flat = Vec::with_capacity(rows * flat_len);
        let mut caches: Vec<Vec<BlockCache>> = Vec::with_capacity(rows);
        for r in 0..rows {
            let mut c = Vec::with_capacity(self.conv_layers.len());
            let f = self.blocks_forward(params, &x[r * in_len..(r + 1) * in_len], dropout.as_deref_mut(), Some(&mut c));
            flat.extend_from_slice(&f);
            caches.push(c);
        }
        let head = self.head_index();
        let mut out = Vec::new();
        dense_forward(&flat, rows, params.block(head), params.block(head + 1), &mut out);
        finish_output(self.output_activation(), &mut out, self.output_dim);
        let loss = loss_slices(self.task, &out, y, rows);

        let mut grads = ModelParams::zeros(self.param_shapes());
        let delta = output_delta(self.task, &out, y, rows);
        let has_blocks = !self.conv_layers.is_empty();
        let (gw, gb) = grads.pair_mut(head);
        let d_flat = dense_backward(&flat, rows, params.block(head), &delta, gw, gb, has_blocks);
        if let Some(d_flat) = d_flat {
            for (r, cache) in caches.iter().enumerate() {
                let d = d_flat[r * flat_len..(r + 1) * flat_len].to_vec();
                self.blocks_backward(params, cache, d, &mut grads);
            }
        }
        (loss, grads)
    }
}

fn finish_output(act: Activation, out: &mut [f64], width: usize) {
    if act == Activation::Softmax {
        softmax_rows(out, width);
    } else {
        for v in out.iter_mut() {
            *v = act.apply(*v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer(channels: usize, kernel: usize, pooling: usize, dropout: f64) -> ConvLayerSpec {
        ConvLayerSpec { channels, kernel_size: kernel, pooling, dropout_rate: dropout, activation: Activation::Relu }
    }

    #[test]
    fn zero_kernel_gives_zero_output() {
        let x = Tensor::new(vec![3, 3, 1], vec![1.0; 9]).unwrap();
        let k = Tensor::zeros(vec![2, 2, 1, 1]);
        let out = conv2d_forward(&x, &k, &[0.0], Activation::Identity).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
        assert_eq!(out.shape(), &[3, 3, 1]);
    }

    #[test]
    fn ones_kernel_sums_windows() {
        let x = Tensor::new(vec![3, 3, 1], vec![1.0; 9]).unwrap();
        let k = Tensor::new(vec![2, 2, 1, 1], vec![1.0; 4]).unwrap();
        let out = conv2d_forward(&x, &k, &[0.0], Activation::Identity).unwrap();
        // padding goes after for even kernels: full windows cover the top-left 2x2 outputs
        assert_eq!(out.data(), &[4.0, 4.0, 2.0, 4.0, 4.0, 2.0, 2.0, 2.0, 1.0]);
    }

    #[test]
    fn conv_is_linear_without_activation() {
        let x = Tensor::new(vec![4, 4, 2], (0..32).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
        let k = Tensor::new(vec![3, 3, 2, 3], (0..54).map(|i| (i as f64 * 0.11).cos()).collect()).unwrap();
        let a = conv2d_forward(&x.scale(2.5), &k, &[0.0; 3], Activation::Identity).unwrap();
        let b = conv2d_forward(&x, &k, &[0.0; 3], Activation::Identity).unwrap().scale(2.5);
        for (p, q) in a.data().iter().zip(b.data()) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn conv_rejects_channel_mismatch() {
        let x = Tensor::zeros(vec![3, 3, 2]);
        let k = Tensor::zeros(vec![2, 2, 1, 1]);
        assert!(conv2d_forward(&x, &k, &[0.0], Activation::Relu).is_err());
    }

    #[test]
    fn pooling_cases() {
        let x = Tensor::new(vec![2, 2, 1], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(maxpool_forward(&x, 1).unwrap(), x);
        let p = maxpool_forward(&x, 2).unwrap();
        assert_eq!(p.data(), &[4.0]);
        let odd = Tensor::new(vec![3, 3, 1], (0..9).map(f64::from).collect()).unwrap();
        assert_eq!(maxpool_forward(&odd, 2).unwrap().shape(), &[1, 1, 1]);
        assert!(maxpool_forward(&Tensor::zeros(vec![1, 4, 1]), 2).is_err());
        assert!(maxpool_forward(&x, 3).is_err());
    }

    #[test]
    fn dropout_cases() {
        let x = Tensor::new(vec![10_000], vec![1.0; 10_000]).unwrap();
        assert_eq!(dropout_apply(&x, 0.0, 1, true).unwrap(), x);
        assert_eq!(dropout_apply(&x, 0.7, 1, false).unwrap(), x);
        let d = dropout_apply(&x, 0.5, 42, true).unwrap();
        let mean = d.data().iter().sum::<f64>() / 10_000.0;
        assert!((0.9..=1.1).contains(&mean), "{mean}");
        assert_eq!(d, dropout_apply(&x, 0.5, 42, true).unwrap());
        assert!(dropout_apply(&x, 1.0, 1, true).is_err());
    }

    #[test]
    fn zero_params_classify_uniformly() {
        let arch = CnnArchitecture::new((4, 4, 1), vec![layer(2, 3, 2, 0.0)], 3, Task::Classification).unwrap();
        let params = ModelParams::zeros(arch.param_shapes());
        let out = arch.forward(&params, &Tensor::new(vec![16], vec![0.5; 16]).unwrap()).unwrap();
        for &p in out.data() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn single_block_reduces_to_conv_plus_head() {
        let arch = CnnArchitecture::new((3, 3, 1), vec![layer(2, 2, 1, 0.0)], 1, Task::Regression).unwrap();
        let params = arch.init_params(3);
        let x = Tensor::new(vec![3, 3, 1], (0..9).map(|i| i as f64 / 9.0).collect()).unwrap();
        let conv = conv2d_forward(&x, &params.tensor(0), params.block(1), Activation::Relu).unwrap();
        let expected: f64 = params.block(3)[0] + conv.data().iter().zip(params.block(2)).map(|(a, b)| a * b).sum::<f64>();
        let got = arch.forward(&params, &Tensor::vector(x.data().to_vec())).unwrap();
        assert!((got.data()[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn rejects_collapsing_spatial_size() {
        let r = CnnArchitecture::new((2, 2, 1), vec![layer(1, 2, 2, 0.0), layer(1, 2, 2, 0.0)], 2, Task::Classification);
        assert!(r.is_err());
        let r = CnnArchitecture::new((6, 6, 1), vec![layer(1, 6, 1, 0.0)], 2, Task::Classification);
        assert!(r.is_err());
    }

    #[test]
    fn dropout_is_identity_at_inference() {
        let arch = CnnArchitecture::new((4, 4, 1), vec![layer(3, 2, 1, 0.6)], 2, Task::Classification).unwrap();
        let params = arch.init_params(1);
        let x: Vec<f64> = (0..16).map(|i| i as f64 * 0.1).collect();
        let mut plain = arch.clone();
        plain.conv_layers[0].dropout_rate = 0.0;
        assert_eq!(arch.forward_rows(&params, &x, 1, None), plain.forward_rows(&params, &x, 1, None));
    }
}
