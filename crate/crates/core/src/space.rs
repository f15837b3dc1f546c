//! Hyperparameter domains and per-layer sampling.

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::conv::{CnnArchitecture, ConvLayerSpec, ImageShape, KERNEL_SIZES, POOL_WINDOWS};

pub const DEFAULT_DEPTH_CAP: usize = 5;
const BATCH_FLOOR: usize = 10;
/// Resampling attempts before a CNN layer falls back to no pooling.
const MAX_POOL_RETRIES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Mlp,
    Cnn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub family: Family,
    /// Maximum number of hidden layers `L`.
    pub depth_cap: usize,
    /// Largest width (or channel count) a layer may take; the smallest is 1.
    pub max_units: usize,
    pub activations: Vec<Activation>,
    pub batch_min: usize,
    pub batch_max: usize,
    pub kernel_min: usize,
    pub kernel_max: usize,
    pub pool_windows: Vec<usize>,
    /// Dropout is drawn from `[0, dropout_max)`.
    pub dropout_max: f64,
    /// Input image shape, used to reject pooling stacks that collapse the map.
    pub image_shape: Option<ImageShape>,
}

/// Widest layer allowed for `n_train` training rows: `floor(sqrt(n))`, at least 1.
pub fn max_units_for(n_train: usize) -> usize {
    let mut r = (n_train as f64).sqrt() as usize;
    while r * r > n_train {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n_train {
        r += 1;
    }
    r.max(1)
}

/// Batch-size bounds `[10, floor(n/10)]`. Below 100 rows the range collapses to
/// the single value `min(10, n)`.
pub fn batch_range_for(n_train: usize) -> (usize, usize) {
    let hi = n_train / 10;
    if hi >= BATCH_FLOOR {
        (BATCH_FLOOR, hi)
    } else {
        let lo = BATCH_FLOOR.min(n_train).max(1);
        log::warn!("{n_train} training rows leave no batch range [10, n/10]; using batch size {lo}");
        (lo, lo)
    }
}

impl SearchSpace {
    pub fn mlp(n_train: usize) -> Self {
        let (batch_min, batch_max) = batch_range_for(n_train);
        Self {
            family: Family::Mlp,
            depth_cap: DEFAULT_DEPTH_CAP,
            max_units: max_units_for(n_train),
            activations: Activation::HIDDEN.to_vec(),
            batch_min,
            batch_max,
            kernel_min: *KERNEL_SIZES.start(),
            kernel_max: *KERNEL_SIZES.end(),
            pool_windows: POOL_WINDOWS.to_vec(),
            dropout_max: 1.0,
            image_shape: None,
        }
    }

    pub fn cnn(n_train: usize) -> Self {
        Self { family: Family::Cnn, ..Self::mlp(n_train) }
    }

    pub fn with_image_shape(mut self, shape: ImageShape) -> Self {
        self.image_shape = Some(shape);
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.depth_cap == 0 {
            return Err("depth cap must be at least 1".into());
        }
        if self.max_units == 0 {
            return Err("max units must be at least 1".into());
        }
        if self.activations.is_empty() || self.activations.iter().any(|a| !a.is_hidden()) {
            return Err("activation set must be a nonempty subset of relu/sigmoid/tanh/elu".into());
        }
        if self.batch_min == 0 || self.batch_min > self.batch_max {
            return Err(format!("empty batch range [{}, {}]", self.batch_min, self.batch_max));
        }
        if self.family == Family::Cnn {
            if self.kernel_min < *KERNEL_SIZES.start() || self.kernel_max > *KERNEL_SIZES.end() || self.kernel_min > self.kernel_max {
                return Err(format!("kernel range [{}, {}] outside [2, 5]", self.kernel_min, self.kernel_max));
            }
            if self.pool_windows.is_empty() || self.pool_windows.iter().any(|p| !POOL_WINDOWS.contains(p)) {
                return Err("pooling windows must be a nonempty subset of {1, 2}".into());
            }
            if !(self.dropout_max > 0.0 && self.dropout_max <= 1.0) {
                return Err(format!("dropout upper bound {} outside (0, 1]", self.dropout_max));
            }
        }
        Ok(())
    }

    /// Number of (width, activation) choices for one layer.
    pub fn layer_choices(&self) -> u64 {
        self.max_units as u64 * self.activations.len() as u64
    }
}

/// Extra hyperparameters of a convolutional layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvExtras {
    pub kernel_size: usize,
    pub pooling: usize,
    pub dropout_rate: f64,
}

/// One sampled hidden layer. `units` is the neuron count for dense layers and
/// the channel count for convolutional ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerSample {
    pub units: usize,
    pub activation: Activation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conv: Option<ConvExtras>,
}

impl LayerSample {
    pub fn to_conv_spec(&self) -> Option<ConvLayerSpec> {
        self.conv.map(|c| ConvLayerSpec {
            channels: self.units,
            kernel_size: c.kernel_size,
            pooling: c.pooling,
            dropout_rate: c.dropout_rate,
            activation: self.activation,
        })
    }

    pub fn in_space(&self, space: &SearchSpace) -> bool {
        let base = (1..=space.max_units).contains(&self.units) && space.activations.contains(&self.activation);
        match (space.family, self.conv) {
            (Family::Mlp, None) => base,
            (Family::Cnn, Some(c)) => {
                base && (space.kernel_min..=space.kernel_max).contains(&c.kernel_size)
                    && space.pool_windows.contains(&c.pooling)
                    && (0.0..space.dropout_max).contains(&c.dropout_rate)
            }
            _ => false,
        }
    }
}

/// One candidate: frozen layers, a freshly sampled last layer and a batch size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub frozen_prefix: Vec<LayerSample>,
    /// `None` only for the depth-0 baseline model.
    pub new_layer: Option<LayerSample>,
    pub batch_size: usize,
    pub trial_index: usize,
    pub trial_seed: u64,
}

impl TrialSpec {
    /// Number of hidden layers of the candidate.
    pub fn depth(&self) -> usize {
        self.frozen_prefix.len() + usize::from(self.new_layer.is_some())
    }

    /// All hidden layers in order.
    pub fn layers(&self) -> Vec<LayerSample> {
        let mut l = self.frozen_prefix.clone();
        l.extend(self.new_layer);
        l
    }
}

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for trial `trial_index` of iteration `iteration`, independent of scheduling.
pub fn derive_seed(master_seed: u64, iteration: usize, trial_index: usize) -> u64 {
    mix(mix(mix(master_seed) ^ iteration as u64) ^ (trial_index as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

pub fn trial_rng(master_seed: u64, iteration: usize, trial_index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master_seed, iteration, trial_index))
}

/// Draws every field of one layer uniformly from its domain.
pub fn sample_layer<R: Rng + ?Sized>(space: &SearchSpace, rng: &mut R) -> LayerSample {
    let units = rng.random_range(1..=space.max_units);
    let activation = space.activations[rng.random_range(0..space.activations.len())];
    let conv = match space.family {
        Family::Mlp => None,
        Family::Cnn => Some(ConvExtras {
            kernel_size: rng.random_range(space.kernel_min..=space.kernel_max),
            pooling: space.pool_windows[rng.random_range(0..space.pool_windows.len())],
            dropout_rate: rng.random_range(0.0..space.dropout_max),
        }),
    };
    LayerSample { units, activation, conv }
}

/// Samples a layer to append after `prefix`, keeping CNN feature maps non-empty.
fn sample_feasible_layer<R: Rng + ?Sized>(space: &SearchSpace, prefix: &[LayerSample], rng: &mut R) -> LayerSample {
    let mut layer = sample_layer(space, rng);
    let Some(shape) = space.image_shape.filter(|_| space.family == Family::Cnn) else {
        return layer;
    };
    let fits = |l: &LayerSample| {
        let specs: Vec<ConvLayerSpec> = prefix.iter().chain(std::iter::once(l)).filter_map(LayerSample::to_conv_spec).collect();
        CnnArchitecture::spatial_after(shape, &specs).is_ok()
    };
    let mut tries = 0;
    while !fits(&layer) && tries < MAX_POOL_RETRIES {
        layer = sample_layer(space, rng);
        tries += 1;
    }
    if !fits(&layer) {
        if let Some(c) = layer.conv.as_mut() {
            c.pooling = 1;
        }
    }
    layer
}

pub fn sample_batch_size<R: Rng + ?Sized>(space: &SearchSpace, rng: &mut R) -> usize {
    rng.random_range(space.batch_min..=space.batch_max)
}

/// Candidate at depth `prefix.len() + 1`: the prefix is copied verbatim, the
/// new layer and the batch size are drawn fresh.
pub fn sample_trial<R: Rng + ?Sized>(space: &SearchSpace, prefix: &[LayerSample], trial_index: usize, rng: &mut R) -> TrialSpec {
    let new_layer = sample_feasible_layer(space, prefix, rng);
    let batch_size = sample_batch_size(space, rng);
    let trial_seed = rng.random();
    TrialSpec { frozen_prefix: prefix.to_vec(), new_layer: Some(new_layer), batch_size, trial_index, trial_seed }
}

/// An unconstrained candidate for plain random search: depth uniform in
/// `[1, depth_cap]`, every layer sampled independently.
pub fn sample_full_trial<R: Rng + ?Sized>(space: &SearchSpace, trial_index: usize, rng: &mut R) -> TrialSpec {
    let depth = rng.random_range(1..=space.depth_cap);
    let mut layers: Vec<LayerSample> = Vec::with_capacity(depth);
    for _ in 0..depth {
        let l = sample_feasible_layer(space, &layers, rng);
        layers.push(l);
    }
    let new_layer = layers.pop();
    let batch_size = sample_batch_size(space, rng);
    let trial_seed = rng.random();
    TrialSpec { frozen_prefix: layers, new_layer, batch_size, trial_index, trial_seed }
}

/// Architectures reachable by searching all `depth` layers jointly:
/// `(max_units * |activations|)^depth`.
pub fn full_cardinality(space: &SearchSpace, depth: usize) -> BigUint {
    BigUint::from(space.layer_choices()).pow(depth as u32)
}

/// Architectures spanned by one layer-wise iteration: `max_units * |activations|`,
/// independent of depth.
pub fn stratified_cardinality(space: &SearchSpace) -> BigUint {
    BigUint::from(space.layer_choices())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mlp_bounds() {
        let s = SearchSpace::mlp(3240);
        assert_eq!((s.max_units, s.batch_min, s.batch_max), (56, 10, 324));
        let s = SearchSpace::mlp(100);
        assert_eq!((s.max_units, s.batch_min, s.batch_max), (10, 10, 10));
        let s = SearchSpace::mlp(10_000);
        assert_eq!((s.max_units, s.batch_min, s.batch_max), (100, 10, 1000));
        assert_eq!(s.activations.len(), 4);
        assert_eq!(s.depth_cap, 5);
    }

    #[test]
    fn small_training_sets_keep_a_batch_value() {
        assert_eq!(batch_range_for(50), (10, 10));
        assert_eq!(batch_range_for(4), (4, 4));
        assert_eq!(max_units_for(1), 1);
        assert_eq!(max_units_for(99), 9);
    }

    #[test]
    fn cnn_domains() {
        let s = SearchSpace::cnn(1620);
        assert_eq!((s.kernel_min..=s.kernel_max).count(), 4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            let l = sample_layer(&s, &mut rng);
            let c = l.conv.unwrap();
            assert!((0.0..=1.0).contains(&c.dropout_rate));
            assert!(c.pooling == 1 || c.pooling == 2);
            assert!(l.in_space(&s));
        }
    }

    #[test]
    fn first_depth_has_empty_prefix() {
        let s = SearchSpace::mlp(500);
        let t = sample_trial(&s, &[], 0, &mut trial_rng(3, 1, 0));
        assert!(t.frozen_prefix.is_empty());
        assert_eq!(t.depth(), 1);
    }

    #[test]
    fn same_rng_state_same_trial() {
        let s = SearchSpace::cnn(900).with_image_shape((8, 8, 1));
        let a = sample_trial(&s, &[], 4, &mut trial_rng(11, 2, 4));
        let b = sample_trial(&s, &[], 4, &mut trial_rng(11, 2, 4));
        assert_eq!(a, b);
        assert_ne!(derive_seed(11, 2, 4), derive_seed(11, 2, 5));
        assert_ne!(derive_seed(11, 2, 4), derive_seed(11, 3, 4));
    }

    #[test]
    fn width_frequencies_are_uniform() {
        // chi-square-style check: every count within 5 sigma of n/k
        let mut s = SearchSpace::mlp(100);
        s.max_units = 10;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 10_000;
        let mut counts = [0usize; 10];
        for _ in 0..n {
            counts[sample_layer(&s, &mut rng).units - 1] += 1;
        }
        let p = 0.1;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * p).abs() <= 5.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn cnn_sampling_never_collapses_the_map() {
        let s = SearchSpace::cnn(1600).with_image_shape((4, 4, 1));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for i in 0..300 {
            let t = sample_full_trial(&s, i, &mut rng);
            let specs: Vec<_> = t.layers().iter().filter_map(LayerSample::to_conv_spec).collect();
            assert!(CnnArchitecture::spatial_after((4, 4, 1), &specs).is_ok());
        }
    }

    #[test]
    fn cardinality_example() {
        let mut s = SearchSpace::mlp(100);
        s.max_units = 10;
        assert_eq!(full_cardinality(&s, 3), BigUint::from(64_000u32));
        assert_eq!(stratified_cardinality(&s), BigUint::from(40u32));
        assert_eq!(full_cardinality(&s, 1), stratified_cardinality(&s));
    }

    proptest! {
        #[test]
        fn samples_stay_in_domain(n in 1usize..20_000, seed in any::<u64>(), cnn in any::<bool>()) {
            let s = if cnn { SearchSpace::cnn(n) } else { SearchSpace::mlp(n) };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in 0..100 {
                let t = sample_full_trial(&s, i, &mut rng);
                prop_assert!(t.depth() >= 1 && t.depth() <= s.depth_cap);
                prop_assert!(t.layers().iter().all(|l| l.in_space(&s)));
                prop_assert!((s.batch_min..=s.batch_max).contains(&t.batch_size));
            }
        }

        #[test]
        fn stratified_reduction(units in 1usize..200, acts in 1usize..=4, depth in 1usize..8) {
            let mut s = SearchSpace::mlp(100);
            s.max_units = units;
            s.activations.truncate(acts);
            prop_assume!(s.layer_choices() >= 2);
            let strat = stratified_cardinality(&s) * BigUint::from(depth);
            let full = full_cardinality(&s, depth);
            prop_assert!(strat <= full);
            prop_assert_eq!(strat == full, depth == 1);
        }

        #[test]
        fn new_layer_ignores_prefix_contents(seed in any::<u64>(), w in 1usize..20) {
            let s = SearchSpace::mlp(400);
            let prefix = vec![LayerSample { units: w, activation: Activation::Elu, conv: None }];
            let a = sample_trial(&s, &prefix, 0, &mut ChaCha8Rng::seed_from_u64(seed));
            let b = sample_trial(&s, &[LayerSample { units: 1, activation: Activation::Relu, conv: None }], 0, &mut ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(a.new_layer, b.new_layer);
            prop_assert_eq!(a.frozen_prefix, prefix);
        }
    }
}
