//! Mini-batch Adam training with early stopping on the validation score.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adam::AdamState;
use crate::data::Dataset;
use crate::error::{MetricError, TrainError};
use crate::loss::Task;
use crate::metrics::{argmax_rows, f1_score, r2_score_columns};
use crate::network::{ModelParams, Network};
use crate::tensor::Tensor;

pub const DEFAULT_LEARNING_RATE: f64 = 0.001;
pub const DEFAULT_PATIENCE: usize = 10;
pub const DEFAULT_MIN_DELTA: f64 = 1e-4;
/// An epoch whose mean loss exceeds this multiple of the initial loss (floored
/// at 1) counts as diverged.
pub const DIVERGENCE_RATIO: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub early_stop_patience: usize,
    pub early_stop_min_delta: f64,
    pub seed: u64,
}

impl TrainConfig {
    /// Defaults for a training set of `n_train` rows: the epoch cap equals `n_train`.
    pub fn for_training_set(n_train: usize, batch_size: usize, seed: u64) -> Self {
        Self {
            learning_rate: DEFAULT_LEARNING_RATE,
            batch_size,
            max_epochs: n_train,
            early_stop_patience: DEFAULT_PATIENCE,
            early_stop_min_delta: DEFAULT_MIN_DELTA,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub train_loss: f64,
    pub val_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel<N> {
    pub arch: N,
    /// Snapshot with the best validation score seen (including the initial parameters).
    pub params: ModelParams,
    pub history: Vec<EpochRecord>,
    pub stopped_epoch: usize,
    /// Epoch of the returned snapshot; 0 means the initial parameters.
    pub best_epoch: usize,
    pub best_val_score: f64,
}

/// Validation score for model selection: R² for regression, F1 for classification.
pub fn score<N: Network>(net: &N, params: &ModelParams, ds: &Dataset) -> Result<f64, MetricError> {
    let out = net.forward_rows(params, ds.features(), ds.rows(), None);
    score_outputs(net.task(), net.output_dim(), &out, ds)
}

pub(crate) fn score_outputs(task: Task, output_dim: usize, out: &[f64], ds: &Dataset) -> Result<f64, MetricError> {
    match task {
        Task::Regression => {
            let y = ds.regression_targets().ok_or(MetricError::Undefined("classification data for a regression model"))?;
            if out.iter().any(|v| !v.is_finite()) {
                return Ok(f64::NEG_INFINITY);
            }
            r2_score_columns(y, out, output_dim)
        }
        Task::Classification => {
            let y = ds.labels().ok_or(MetricError::Undefined("regression data for a classification model"))?;
            f1_score(y, &argmax_rows(out, output_dim), output_dim)
        }
    }
}

fn check_data<N: Network>(net: &N, ds: &Dataset, which: &'static str) -> Result<(), TrainError> {
    if ds.rows() == 0 {
        return Err(TrainError::EmptySet(which));
    }
    if ds.feature_dim() != net.input_len() || ds.output_dim() != net.output_dim() || ds.task() != net.task() {
        return Err(TrainError::Config(format!(
            "{which} set ({} features, {} outputs, {:?}) does not fit the model ({} inputs, {} outputs, {:?})",
            ds.feature_dim(),
            ds.output_dim(),
            ds.task(),
            net.input_len(),
            net.output_dim(),
            net.task()
        )));
    }
    Ok(())
}

/// Trains from Glorot initialisation seeded by `cfg.seed`.
///
/// Stops after `cfg.max_epochs` epochs, or once the validation score has
/// failed to beat the best reference by `min_delta` for `patience` epochs in
/// a row. Returns the best-scoring snapshot.
pub fn train<N: Network>(net: &N, train_set: &Dataset, val_set: &Dataset, cfg: &TrainConfig) -> Result<TrainedModel<N>, TrainError> {
    check_data(net, train_set, "training")?;
    check_data(net, val_set, "validation")?;
    if cfg.batch_size == 0 {
        return Err(TrainError::Config("batch size must be positive".into()));
    }
    if !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) {
        return Err(TrainError::Config(format!("learning rate {} is not positive", cfg.learning_rate)));
    }

    let mut params = net.init_params(cfg.seed);
    let mut best_params = params.clone();
    let mut best_score = score(net, &params, val_set)?;
    let mut best_epoch = 0;
    // early-stopping reference: only moves on improvements of at least min_delta
    let mut reference = best_score;
    let mut waited = 0;

    let n = train_set.rows();
    let in_dim = net.input_len();
    let out_dim = net.output_dim();
    let targets = train_set.target_matrix();
    let mut order: Vec<usize> = (0..n).collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9E37_79B9_7F4A_7C15);
    let mut opt = AdamState::new(params.len());
    let mut history = Vec::new();
    let mut bx = Vec::with_capacity(cfg.batch_size * in_dim);
    let mut by = Vec::with_capacity(cfg.batch_size * out_dim);
    let mut loss_cap = f64::INFINITY;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            bx.clear();
            by.clear();
            for &i in chunk {
                bx.extend_from_slice(train_set.feature_row(i));
                by.extend_from_slice(&targets[i * out_dim..(i + 1) * out_dim]);
            }
            let (loss, grads) = net.loss_and_grad(&params, &bx, &by, chunk.len(), Some(&mut dropout_rng));
            if !loss.is_finite() || !grads.is_finite() {
                return Err(TrainError::Diverged { epoch });
            }
            if loss_cap.is_infinite() {
                loss_cap = DIVERGENCE_RATIO * loss.max(1.0);
            }
            loss_sum += loss * chunk.len() as f64;
            opt.step(params.as_mut_slice(), grads.as_slice(), cfg.learning_rate);
        }
        if !params.is_finite() || loss_sum / n as f64 > loss_cap {
            return Err(TrainError::Diverged { epoch });
        }
        let val_score = score(net, &params, val_set)?;
        if !val_score.is_finite() {
            return Err(TrainError::Diverged { epoch });
        }
        history.push(EpochRecord { train_loss: loss_sum / n as f64, val_score });
        if val_score > best_score {
            best_score = val_score;
            best_params = params.clone();
            best_epoch = epoch;
        }
        if val_score > reference + cfg.early_stop_min_delta {
            reference = val_score;
            waited = 0;
        } else {
            waited += 1;
            if waited >= cfg.early_stop_patience {
                break;
            }
        }
    }

    Ok(TrainedModel {
        arch: net.clone(),
        params: best_params,
        stopped_epoch: history.len(),
        history,
        best_epoch,
        best_val_score: best_score,
    })
}

/// Model outputs plus, for classifiers, the argmax class of each row.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Regression values or class probabilities, one row per input row.
    pub outputs: Tensor,
    pub labels: Option<Vec<usize>>,
}

pub fn predict<N: Network>(model: &TrainedModel<N>, x: &Tensor) -> Result<Prediction, TrainError> {
    let outputs = model.arch.forward(&model.params, x)?;
    let labels = match model.arch.task() {
        Task::Classification => Some(argmax_rows(outputs.data(), model.arch.output_dim())),
        Task::Regression => None,
    };
    Ok(Prediction { outputs, labels })
}

impl<N: Network> TrainedModel<N> {
    /// Selection score of the stored snapshot on `ds`.
    pub fn score(&self, ds: &Dataset) -> Result<f64, MetricError> {
        score(&self.arch, &self.params, ds)
    }
}
