//! Greedy layer-wise search and the plain random-search baseline.
//!
//! Candidates of one iteration are trained on a bounded rayon pool. Sampling
//! happens on the coordinator from per-trial seeds and results are collected
//! in trial order, so the outcome never depends on scheduling.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conv::CnnArchitecture;
use crate::data::{Dataset, SplitData};
use crate::error::{MetricError, ShapeError, TrainError};
use crate::loss::Task;
use crate::mlp::{ArchitectureSpec, LayerSpec};
use crate::model::{AnyModel, Architecture};
use crate::space::{derive_seed, sample_full_trial, sample_trial, trial_rng, Family, LayerSample, SearchSpace, TrialSpec};
use crate::train::{train, TrainConfig, DEFAULT_LEARNING_RATE, DEFAULT_MIN_DELTA, DEFAULT_PATIENCE};

pub const DEFAULT_EVALS_PER_ITERATION: usize = 25;
pub const DEFAULT_SCORE_THRESHOLD: f64 = 0.99;
const BASELINE_BATCH: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingProtocol {
    pub learning_rate: f64,
    /// `None` caps epochs at the training-set size.
    pub max_epochs: Option<usize>,
    pub patience: usize,
    pub min_delta: f64,
}

impl Default for TrainingProtocol {
    fn default() -> Self {
        Self { learning_rate: DEFAULT_LEARNING_RATE, max_epochs: None, patience: DEFAULT_PATIENCE, min_delta: DEFAULT_MIN_DELTA }
    }
}

impl TrainingProtocol {
    pub fn train_config(&self, n_train: usize, batch_size: usize, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size,
            max_epochs: self.max_epochs.unwrap_or(n_train),
            early_stop_patience: self.patience,
            early_stop_min_delta: self.min_delta,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub space: SearchSpace,
    /// Candidates per iteration, `C`.
    pub evals_per_iteration: usize,
    pub score_threshold: f64,
    pub master_seed: u64,
    /// Upper bound on simultaneously training candidates.
    pub max_concurrency: usize,
    pub training: TrainingProtocol,
}

impl SearchConfig {
    pub fn new(space: SearchSpace) -> Self {
        Self {
            space,
            evals_per_iteration: DEFAULT_EVALS_PER_ITERATION,
            score_threshold: DEFAULT_SCORE_THRESHOLD,
            master_seed: 0,
            max_concurrency: std::thread::available_parallelism().map_or(1, |n| n.get()),
            training: TrainingProtocol::default(),
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |m: String| Err(SearchError::Config(m));
        self.space.validate().map_err(SearchError::Config)?;
        if self.evals_per_iteration == 0 {
            return bad("evaluations per iteration must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.score_threshold) {
            return bad(format!("score threshold {} outside [0, 1]", self.score_threshold));
        }
        if self.max_concurrency == 0 {
            return bad("max concurrency must be at least 1".into());
        }
        let t = &self.training;
        if !(t.learning_rate > 0.0 && t.learning_rate.is_finite()) {
            return bad(format!("learning rate {} is not positive", t.learning_rate));
        }
        if t.patience == 0 {
            return bad("early-stopping patience must be at least 1".into());
        }
        if t.min_delta.is_nan() || t.min_delta < 0.0 {
            return bad(format!("min delta {} is negative", t.min_delta));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    Ok,
    Diverged,
    Infeasible,
}

/// Serialises non-finite scores as `null` and reads `null` back as `-inf`.
mod sentinel {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub iteration: usize,
    pub trial: TrialSpec,
    pub status: TrialStatus,
    /// Validation score of the kept snapshot; `-inf` for failed trials.
    #[serde(with = "sentinel")]
    pub val_score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_score: Option<f64>,
    pub epochs_used: usize,
    pub best_epoch: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub wall_seconds: f64,
    #[serde(skip)]
    pub model: Option<Arc<AnyModel>>,
}

impl TrialResult {
    pub fn failed(iteration: usize, trial: TrialSpec, status: TrialStatus, error: String) -> Self {
        Self {
            iteration,
            trial,
            status,
            val_score: f64::NEG_INFINITY,
            test_score: None,
            epochs_used: 0,
            best_epoch: 0,
            error: Some(error),
            wall_seconds: 0.0,
            model: None,
        }
    }

    pub fn depth(&self) -> usize {
        self.trial.depth()
    }

    fn viable(&self) -> bool {
        self.status == TrialStatus::Ok && !self.val_score.is_nan() && self.val_score > f64::NEG_INFINITY
    }
}

/// Turns a [`TrialSpec`] into a trained and scored candidate.
///
/// `Err` is reserved for problems that make every trial fail alike (bad data,
/// undefined metrics); divergence is reported through the result status.
pub trait TrialEvaluator: Sync {
    fn evaluate(&self, trial: &TrialSpec, iteration: usize, data: &SplitData, cfg: &SearchConfig) -> Result<TrialResult, TrainError>;
}

/// Trains each candidate with the configured protocol.
#[derive(Debug, Clone, Copy, Default)]
pub struct Trainer;

impl TrialEvaluator for Trainer {
    fn evaluate(&self, trial: &TrialSpec, iteration: usize, data: &SplitData, cfg: &SearchConfig) -> Result<TrialResult, TrainError> {
        evaluate_trial(trial, iteration, data, cfg)
    }
}

/// Network for `trial` on `data`. The depth-0 baseline is always a dense
/// model with no hidden layer.
pub fn trial_architecture(trial: &TrialSpec, space: &SearchSpace, data: &Dataset) -> Result<Architecture, ShapeError> {
    let layers = trial.layers();
    let (input, output, task) = (data.feature_dim(), data.output_dim(), data.task());
    if space.family == Family::Mlp || layers.is_empty() {
        let hidden = layers.iter().map(|l| LayerSpec::new(l.units, l.activation)).collect();
        return ArchitectureSpec::new(input, output, hidden, task).map(Architecture::Mlp);
    }
    let shape =
        data.image_shape.or(space.image_shape).ok_or_else(|| ShapeError::new("convolutional search needs image-shaped data".into()))?;
    let conv = layers
        .iter()
        .map(|l| l.to_conv_spec().ok_or_else(|| ShapeError::new("dense layer sample in a convolutional search".into())))
        .collect::<Result<Vec<_>, _>>()?;
    CnnArchitecture::new(shape, conv, output, task).map(Architecture::Cnn)
}

fn train_any(arch: &Architecture, data: &SplitData, cfg: &TrainConfig) -> Result<AnyModel, TrainError> {
    match arch {
        Architecture::Mlp(a) => train(a, &data.train, &data.val, cfg).map(AnyModel::Mlp),
        Architecture::Cnn(a) => train(a, &data.train, &data.val, cfg).map(AnyModel::Cnn),
    }
}

pub fn evaluate_trial(trial: &TrialSpec, iteration: usize, data: &SplitData, cfg: &SearchConfig) -> Result<TrialResult, TrainError> {
    let start = Instant::now();
    let arch = match trial_architecture(trial, &cfg.space, &data.train) {
        Ok(a) => a,
        Err(e) => return Ok(TrialResult::failed(iteration, trial.clone(), TrialStatus::Infeasible, e.to_string())),
    };
    let tc = cfg.training.train_config(data.train.rows(), trial.batch_size, trial.trial_seed);
    let mut result = match train_any(&arch, data, &tc) {
        Ok(m) => TrialResult {
            iteration,
            trial: trial.clone(),
            status: TrialStatus::Ok,
            val_score: m.best_val_score(),
            test_score: None,
            epochs_used: m.stopped_epoch(),
            best_epoch: m.best_epoch(),
            error: None,
            wall_seconds: 0.0,
            model: Some(Arc::new(m)),
        },
        Err(e @ TrainError::Diverged { epoch }) => {
            let mut r = TrialResult::failed(iteration, trial.clone(), TrialStatus::Diverged, e.to_string());
            r.epochs_used = epoch;
            r
        }
        Err(e) => return Err(e),
    };
    result.wall_seconds = start.elapsed().as_secs_f64();
    Ok(result)
}

/// Highest validation score, ties to the lowest trial index. `None` when
/// every trial failed.
pub fn select_best(results: &[TrialResult]) -> Option<&TrialResult> {
    results.iter().filter(|r| r.viable()).fold(None, |best: Option<&TrialResult>, r| match best {
        Some(b) if b.val_score > r.val_score || (b.val_score == r.val_score && b.trial.trial_index < r.trial.trial_index) => Some(b),
        _ => Some(r),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchKind {
    Gsnna,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ThresholdReached,
    DepthCapReached,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub trials: Vec<TrialResult>,
    pub best_trial_index: usize,
    #[serde(with = "sentinel")]
    pub best_val_score: f64,
    pub sampling_seconds: f64,
    pub training_seconds: f64,
    pub selection_seconds: f64,
    /// Iteration wall time minus the parallel training block.
    pub coordination_seconds: f64,
}

/// Best validation score reached at one depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerPoint {
    pub depth: usize,
    #[serde(with = "sentinel")]
    pub best_val_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestSummary {
    pub iteration: usize,
    pub trial_index: usize,
    pub depth: usize,
    pub layers: Vec<LayerSample>,
    pub batch_size: usize,
    #[serde(with = "sentinel")]
    pub val_score: f64,
    pub test_score: Option<f64>,
    pub architecture: Option<Architecture>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub total_seconds: f64,
    pub training_seconds: f64,
    pub coordination_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub kind: SearchKind,
    pub family: Family,
    pub task: Task,
    pub metric: String,
    pub evals_per_iteration: usize,
    pub depth_cap: usize,
    pub score_threshold: f64,
    pub master_seed: u64,
    /// Depth-0 model; absent for random search.
    pub baseline: Option<TrialResult>,
    pub iterations: Vec<IterationRecord>,
    pub layer_curve: Vec<LayerPoint>,
    /// The model the greedy loop ends with.
    pub paper_best: BestSummary,
    /// Highest validation score over every selected model.
    pub global_best: BestSummary,
    pub models_trained: usize,
    pub iterations_run: usize,
    pub stop_reason: StopReason,
    pub timing: TimingSummary,
}

impl SearchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

/// A finished search plus the two reported models.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub report: SearchReport,
    pub paper_best_model: Option<Arc<AnyModel>>,
    pub global_best_model: Option<Arc<AnyModel>>,
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid search configuration: {0}")]
    Config(String),
    #[error("baseline model failed: {0}")]
    Baseline(TrainError),
    #[error("trial evaluation failed: {0}")]
    Trial(TrainError),
    #[error("all {count} trials of iteration {iteration} failed")]
    AllTrialsFailed {
        iteration: usize,
        count: usize,
        /// Iterations completed before the failure; `None` when nothing completed.
        partial: Option<Box<SearchReport>>,
    },
    #[error("cannot build worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Shared machinery of both searches.
struct Runner<'a, E: TrialEvaluator> {
    cfg: &'a SearchConfig,
    data: &'a SplitData,
    evaluator: &'a E,
    pool: rayon::ThreadPool,
    observer: &'a mut dyn FnMut(&TrialResult),
    timing: TimingSummary,
    models_trained: usize,
}

impl<'a, E: TrialEvaluator> Runner<'a, E> {
    fn new(
        cfg: &'a SearchConfig,
        data: &'a SplitData,
        evaluator: &'a E,
        observer: &'a mut dyn FnMut(&TrialResult),
    ) -> Result<Self, SearchError> {
        cfg.validate()?;
        if cfg.space.family == Family::Cnn && data.train.image_shape.is_none() && cfg.space.image_shape.is_none() {
            return Err(SearchError::Config("convolutional search needs image-shaped data".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.max_concurrency)
            .thread_name(|i| format!("trial-{i}"))
            .build()
            .map_err(|e| SearchError::Pool(e.to_string()))?;
        Ok(Self { cfg, data, evaluator, pool, observer, timing: TimingSummary::default(), models_trained: 0 })
    }

    fn baseline(&mut self) -> Result<TrialResult, SearchError> {
        let start = Instant::now();
        let r = baseline_model_with(self.evaluator, self.data, self.cfg)?;
        self.timing.training_seconds += start.elapsed().as_secs_f64();
        self.models_trained += 1;
        (self.observer)(&r);
        Ok(r)
    }

    /// Evaluates `specs` in parallel and picks the best. Returns the record
    /// and the selected trial's position, `None` if all failed.
    fn iterate(
        &mut self,
        iteration: usize,
        specs: Vec<TrialSpec>,
        sampling_seconds: f64,
        start: Instant,
    ) -> Result<(IterationRecord, Option<usize>), SearchError> {
        let (evaluator, data, cfg) = (self.evaluator, self.data, self.cfg);
        let train_start = Instant::now();
        let outcomes: Vec<Result<TrialResult, TrainError>> =
            self.pool.install(|| specs.par_iter().map(|s| evaluator.evaluate(s, iteration, data, cfg)).collect());
        let training_seconds = train_start.elapsed().as_secs_f64();

        let select_start = Instant::now();
        let mut trials = Vec::with_capacity(outcomes.len());
        for (spec, outcome) in specs.into_iter().zip(outcomes) {
            let r = match outcome {
                Ok(r) => r,
                Err(e @ (TrainError::Shape(_) | TrainError::Config(_))) => {
                    TrialResult::failed(iteration, spec, TrialStatus::Infeasible, e.to_string())
                }
                Err(e) => return Err(SearchError::Trial(e)),
            };
            (self.observer)(&r);
            trials.push(r);
        }
        self.models_trained += trials.len();
        let chosen = select_best(&trials).map(|b| b.trial.trial_index);
        let pos = chosen.and_then(|i| trials.iter().position(|t| t.trial.trial_index == i));
        // only the selected model is kept alive
        for (i, t) in trials.iter_mut().enumerate() {
            if Some(i) != pos {
                t.model = None;
            }
        }
        let selection_seconds = select_start.elapsed().as_secs_f64();
        let coordination_seconds = (start.elapsed().as_secs_f64() - training_seconds).max(0.0);
        self.timing.training_seconds += training_seconds;
        self.timing.coordination_seconds += coordination_seconds;
        let (best_trial_index, best_val_score) = match pos {
            Some(p) => (trials[p].trial.trial_index, trials[p].val_score),
            None => (0, f64::NEG_INFINITY),
        };
        let record = IterationRecord {
            iteration,
            trials,
            best_trial_index,
            best_val_score,
            sampling_seconds,
            training_seconds,
            selection_seconds,
            coordination_seconds,
        };
        Ok((record, pos))
    }
}

fn baseline_spec(cfg: &SearchConfig) -> TrialSpec {
    TrialSpec {
        frozen_prefix: Vec::new(),
        new_layer: None,
        batch_size: BASELINE_BATCH.clamp(cfg.space.batch_min, cfg.space.batch_max),
        trial_index: 0,
        trial_seed: derive_seed(cfg.master_seed, 0, 0),
    }
}

fn baseline_model_with<E: TrialEvaluator>(evaluator: &E, data: &SplitData, cfg: &SearchConfig) -> Result<TrialResult, SearchError> {
    evaluator.evaluate(&baseline_spec(cfg), 0, data, cfg).map_err(SearchError::Baseline)
}

/// Trains the depth-0 model: linear regression, or softmax regression for classification.
pub fn baseline_model(data: &SplitData, cfg: &SearchConfig) -> Result<TrialResult, SearchError> {
    baseline_model_with(&Trainer, data, cfg)
}

/// Candidates for depth `prefix.len() + 1`, indexed `0..C`.
pub fn sample_iteration(prefix: &[LayerSample], iteration: usize, cfg: &SearchConfig) -> Vec<TrialSpec> {
    (0..cfg.evals_per_iteration).map(|i| sample_trial(&cfg.space, prefix, i, &mut trial_rng(cfg.master_seed, iteration, i))).collect()
}

/// One greedy iteration at depth `prefix.len() + 1` on its own pool. Results are in trial order.
pub fn run_iteration(prefix: &[LayerSample], data: &SplitData, cfg: &SearchConfig) -> Result<Vec<TrialResult>, SearchError> {
    let mut ignore = |_: &TrialResult| {};
    let mut runner = Runner::new(cfg, data, &Trainer, &mut ignore)?;
    let start = Instant::now();
    let depth = prefix.len() + 1;
    let specs = sample_iteration(prefix, depth, cfg);
    let sampling = start.elapsed().as_secs_f64();
    Ok(runner.iterate(depth, specs, sampling, start)?.0.trials)
}

fn summarize(r: &TrialResult, model: Option<&Arc<AnyModel>>, test: &Dataset) -> Result<BestSummary, SearchError> {
    let test_score = model.map(|m| m.score(test)).transpose()?;
    Ok(BestSummary {
        iteration: r.iteration,
        trial_index: r.trial.trial_index,
        depth: r.depth(),
        layers: r.trial.layers(),
        batch_size: r.trial.batch_size,
        val_score: r.val_score,
        test_score,
        architecture: model.map(|m| m.architecture()),
    })
}

struct Selected {
    result: TrialResult,
}

impl Selected {
    fn model(&self) -> Option<&Arc<AnyModel>> {
        self.result.model.as_ref()
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    kind: SearchKind,
    cfg: &SearchConfig,
    data: &SplitData,
    baseline: Option<TrialResult>,
    iterations: Vec<IterationRecord>,
    layer_curve: Vec<LayerPoint>,
    paper: &Selected,
    global: &Selected,
    models_trained: usize,
    stop_reason: StopReason,
    timing: TimingSummary,
) -> Result<SearchOutcome, SearchError> {
    let paper_best = summarize(&paper.result, paper.model(), &data.test)?;
    let global_best =
        if global.result.iteration == paper.result.iteration && global.result.trial.trial_index == paper.result.trial.trial_index {
            paper_best.clone()
        } else {
            summarize(&global.result, global.model(), &data.test)?
        };
    let strip = |mut r: TrialResult| {
        r.model = None;
        r
    };
    let iterations_run = match kind {
        SearchKind::Gsnna => iterations.len(),
        SearchKind::Random => usize::from(!iterations.is_empty()),
    };
    let report = SearchReport {
        kind,
        family: cfg.space.family,
        task: data.train.task(),
        metric: data.train.task().metric_name().into(),
        evals_per_iteration: cfg.evals_per_iteration,
        depth_cap: cfg.space.depth_cap,
        score_threshold: cfg.score_threshold,
        master_seed: cfg.master_seed,
        baseline: baseline.map(strip),
        iterations: iterations
            .into_iter()
            .map(|mut it| {
                it.trials = it.trials.into_iter().map(strip).collect();
                it
            })
            .collect(),
        layer_curve,
        paper_best,
        global_best,
        models_trained,
        iterations_run,
        stop_reason,
        timing,
    };
    Ok(SearchOutcome { report, paper_best_model: paper.model().cloned(), global_best_model: global.model().cloned() })
}

/// Grows the network one layer per iteration, random-searching only the newest layer.
///
/// `data` must already be split (and normalised if desired). `observer` sees
/// every trial result in trial order as iterations complete.
pub fn gsnna_search(cfg: &SearchConfig, data: &SplitData, observer: &mut dyn FnMut(&TrialResult)) -> Result<SearchOutcome, SearchError> {
    gsnna_search_with(cfg, data, &Trainer, observer)
}

pub fn gsnna_search_with<E: TrialEvaluator>(
    cfg: &SearchConfig,
    data: &SplitData,
    evaluator: &E,
    observer: &mut dyn FnMut(&TrialResult),
) -> Result<SearchOutcome, SearchError> {
    let total = Instant::now();
    let mut runner = Runner::new(cfg, data, evaluator, observer)?;
    let baseline = runner.baseline()?;
    log::info!("baseline {}: {:.6}", data.train.task().metric_name(), baseline.val_score);

    let mut best = Selected { result: baseline.clone() };
    let mut global = Selected { result: baseline.clone() };
    let mut layer_curve = vec![LayerPoint { depth: 0, best_val_score: baseline.val_score }];
    let mut iterations: Vec<IterationRecord> = Vec::new();
    let mut score = baseline.val_score;
    let mut depth = 1;

    while score < cfg.score_threshold && depth <= cfg.space.depth_cap {
        let start = Instant::now();
        let prefix = best.result.trial.layers();
        let specs = sample_iteration(&prefix, depth, cfg);
        let sampling = start.elapsed().as_secs_f64();
        let (record, pos) = runner.iterate(depth, specs, sampling, start)?;
        let Some(pos) = pos else {
            let count = record.trials.len();
            let mut timing = runner.timing;
            timing.total_seconds = total.elapsed().as_secs_f64();
            let partial = finish(
                SearchKind::Gsnna,
                cfg,
                data,
                Some(baseline),
                iterations,
                layer_curve,
                &best,
                &global,
                runner.models_trained,
                StopReason::DepthCapReached,
                timing,
            )
            .ok()
            .map(|o| Box::new(o.report));
            return Err(SearchError::AllTrialsFailed { iteration: depth, count, partial });
        };
        let chosen = record.trials[pos].clone();
        log::info!("depth {depth}: best trial {} scored {:.6}", chosen.trial.trial_index, chosen.val_score);
        score = chosen.val_score;
        layer_curve.push(LayerPoint { depth, best_val_score: score });
        if score > global.result.val_score {
            global = Selected { result: chosen.clone() };
        }
        // replaced even when worse than the previous depth
        best = Selected { result: chosen };
        iterations.push(record);
        depth += 1;
    }

    let stop = if score >= cfg.score_threshold { StopReason::ThresholdReached } else { StopReason::DepthCapReached };
    let mut timing = runner.timing;
    timing.total_seconds = total.elapsed().as_secs_f64();
    let models_trained = runner.models_trained;
    finish(SearchKind::Gsnna, cfg, data, Some(baseline), iterations, layer_curve, &best, &global, models_trained, stop, timing)
}

/// Samples `C * L` complete architectures independently and keeps the best.
pub fn random_search(cfg: &SearchConfig, data: &SplitData, observer: &mut dyn FnMut(&TrialResult)) -> Result<SearchOutcome, SearchError> {
    random_search_with(cfg, data, &Trainer, observer)
}

pub fn random_search_with<E: TrialEvaluator>(
    cfg: &SearchConfig,
    data: &SplitData,
    evaluator: &E,
    observer: &mut dyn FnMut(&TrialResult),
) -> Result<SearchOutcome, SearchError> {
    const ITERATION: usize = 1;
    let total = Instant::now();
    let mut runner = Runner::new(cfg, data, evaluator, observer)?;
    let budget = cfg.evals_per_iteration * cfg.space.depth_cap;
    let start = Instant::now();
    let specs: Vec<TrialSpec> =
        (0..budget).map(|i| sample_full_trial(&cfg.space, i, &mut trial_rng(cfg.master_seed ^ RANDOM_SALT, ITERATION, i))).collect();
    let sampling = start.elapsed().as_secs_f64();
    let (record, pos) = runner.iterate(ITERATION, specs, sampling, start)?;
    let Some(pos) = pos else {
        return Err(SearchError::AllTrialsFailed { iteration: ITERATION, count: record.trials.len(), partial: None });
    };
    let best = Selected { result: record.trials[pos].clone() };
    let layer_curve = (1..=cfg.space.depth_cap)
        .map(|depth| {
            let at_depth: Vec<TrialResult> = record.trials.iter().filter(|t| t.depth() == depth).cloned().collect();
            LayerPoint { depth, best_val_score: select_best(&at_depth).map_or(f64::NEG_INFINITY, |b| b.val_score) }
        })
        .collect();
    let mut timing = runner.timing;
    timing.total_seconds = total.elapsed().as_secs_f64();
    let models_trained = runner.models_trained;
    finish(
        SearchKind::Random,
        cfg,
        data,
        None,
        vec![record],
        layer_curve,
        &best,
        &best,
        models_trained,
        StopReason::BudgetExhausted,
        timing,
    )
}

/// Keeps random-search draws apart from the greedy search's seed stream.
const RANDOM_SALT: u64 = 0x5EED_0F0A_A4D0;

/// `(depth, best validation score)` rows in ascending depth.
pub fn layer_sweep_report(report: &SearchReport) -> Vec<LayerPoint> {
    let mut rows = report.layer_curve.clone();
    rows.sort_by_key(|p| p.depth);
    rows
}

/// CSV with header `depth,best_val_score`; failed depths have an empty score.
pub fn layer_sweep_csv(rows: &[LayerPoint]) -> String {
    let mut out = String::from("depth,best_val_score\n");
    for p in rows {
        if p.best_val_score.is_finite() {
            out.push_str(&format!("{},{}\n", p.depth, p.best_val_score));
        } else {
            out.push_str(&format!("{},\n", p.depth));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::Activation;
    use crate::data::{gen_eggbox, split, standardize, SamplingScheme, SplitSpec, Targets};
    use crate::network::Network;

    fn spec(index: usize) -> TrialSpec {
        TrialSpec { frozen_prefix: vec![], new_layer: None, batch_size: 10, trial_index: index, trial_seed: 0 }
    }

    fn scored(index: usize, score: f64) -> TrialResult {
        let mut r = TrialResult::failed(1, spec(index), TrialStatus::Ok, String::new());
        r.error = None;
        r.val_score = score;
        r
    }

    #[test]
    fn select_best_examples() {
        let rs: Vec<_> = [0.2, 0.9, 0.5].iter().enumerate().map(|(i, &s)| scored(i, s)).collect();
        assert_eq!(select_best(&rs).unwrap().trial.trial_index, 1);
        let ties = vec![scored(0, 0.7), scored(1, 0.7)];
        assert_eq!(select_best(&ties).unwrap().trial.trial_index, 0);
        let rev: Vec<_> = ties.into_iter().rev().collect();
        assert_eq!(select_best(&rev).unwrap().trial.trial_index, 0);
        let dead = vec![scored(0, f64::NEG_INFINITY), scored(1, f64::NEG_INFINITY)];
        assert!(select_best(&dead).is_none());
        let mut diverged = scored(0, 0.99);
        diverged.status = TrialStatus::Diverged;
        assert_eq!(select_best(&[diverged, scored(1, 0.1)]).unwrap().trial.trial_index, 1);
    }

    #[test]
    fn sentinel_serialises_as_null() {
        let r = TrialResult::failed(2, spec(3), TrialStatus::Diverged, "boom".into());
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains("\"val_score\":null"));
        let back: TrialResult = serde_json::from_str(&text).unwrap();
        assert_eq!(back.val_score, f64::NEG_INFINITY);
        assert_eq!(back.status, TrialStatus::Diverged);
    }

    fn line_data() -> SplitData {
        let x: Vec<f64> = (0..200).map(|i| i as f64 / 20.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.5 * v + 2.0).collect();
        let ds = Dataset::new(x, 1, Targets::Regression { values: y, dim: 1 }, vec!["x".into()], vec!["y".into()]).unwrap();
        standardize(&split(&ds, &SplitSpec::default()).unwrap(), true, true).0
    }

    #[test]
    fn linear_data_stops_at_baseline() {
        let data = line_data();
        let mut cfg = SearchConfig::new(SearchSpace::mlp(data.train.rows()));
        cfg.evals_per_iteration = 3;
        let mut seen = 0;
        let out = gsnna_search(&cfg, &data, &mut |_| seen += 1).unwrap();
        assert!(out.report.baseline.as_ref().unwrap().val_score >= 0.99);
        assert_eq!(out.report.iterations_run, 0);
        assert_eq!(out.report.models_trained, 1);
        assert_eq!(seen, 1);
        assert_eq!(out.report.stop_reason, StopReason::ThresholdReached);
        assert_eq!(out.report.paper_best.depth, 0);
        assert!(out.report.paper_best.test_score.unwrap() > 0.99);
    }

    #[test]
    fn zero_threshold_returns_baseline() {
        // a linear trend keeps the baseline score positive while staying below 0.99
        let x: Vec<f64> = (0..300).map(|i| i as f64 / 30.0).collect();
        let y: Vec<f64> = x.iter().map(|v| v + (3.0 * v).sin()).collect();
        let ds = Dataset::new(x, 1, Targets::Regression { values: y, dim: 1 }, vec!["x".into()], vec!["y".into()]).unwrap();
        let data = standardize(&split(&ds, &SplitSpec::default()).unwrap(), true, true).0;
        let baseline = baseline_model(&data, &SearchConfig::new(SearchSpace::mlp(data.train.rows()))).unwrap();
        assert!(baseline.val_score > 0.0 && baseline.val_score < 0.99);
        let mut cfg = SearchConfig::new(SearchSpace::mlp(data.train.rows()));
        cfg.score_threshold = 0.0;
        let out = gsnna_search(&cfg, &data, &mut |_| {}).unwrap();
        assert!(out.report.iterations.is_empty());
        assert_eq!(out.report.layer_curve.len(), 1);
        assert_eq!(out.report.paper_best, out.report.global_best);
    }

    #[test]
    fn exploding_learning_rate_marks_divergence() {
        let ds = gen_eggbox(400, 2, SamplingScheme::Uniform).unwrap();
        let data = split(&ds, &SplitSpec::default()).unwrap();
        let mut cfg = SearchConfig::new(SearchSpace::mlp(data.train.rows()));
        cfg.training.learning_rate = 1e6;
        cfg.training.max_epochs = Some(50);
        let t = TrialSpec {
            frozen_prefix: vec![],
            new_layer: Some(LayerSample { units: 10, activation: Activation::Relu, conv: None }),
            batch_size: 10,
            trial_index: 0,
            trial_seed: 9,
        };
        let r = evaluate_trial(&t, 1, &data, &cfg).unwrap();
        assert_eq!(r.status, TrialStatus::Diverged);
        assert_eq!(r.val_score, f64::NEG_INFINITY);
        assert!(r.model.is_none());
    }

    #[test]
    fn zero_epochs_scores_the_initial_model() {
        let data = line_data();
        let mut cfg = SearchConfig::new(SearchSpace::mlp(data.train.rows()));
        cfg.training.max_epochs = Some(0);
        let t = TrialSpec {
            frozen_prefix: vec![],
            new_layer: Some(LayerSample { units: 4, activation: Activation::Tanh, conv: None }),
            batch_size: 10,
            trial_index: 0,
            trial_seed: 5,
        };
        let r = evaluate_trial(&t, 1, &data, &cfg).unwrap();
        let Architecture::Mlp(arch) = trial_architecture(&t, &cfg.space, &data.train).unwrap() else { panic!() };
        let fresh = crate::train::score(&arch, &arch.init_params(5), &data.val).unwrap();
        assert_eq!(r.val_score, fresh);
        assert_eq!(r.epochs_used, 0);
    }

    #[test]
    fn layer_sweep_rows() {
        let ds = gen_eggbox(300, 4, SamplingScheme::Uniform).unwrap();
        let data = standardize(&split(&ds, &SplitSpec::default()).unwrap(), true, true).0;
        let mut cfg = SearchConfig::new(SearchSpace::mlp(data.train.rows()));
        cfg.evals_per_iteration = 2;
        cfg.score_threshold = 1.0;
        cfg.space.depth_cap = 3;
        cfg.training.max_epochs = Some(5);
        let out = gsnna_search(&cfg, &data, &mut |_| {}).unwrap();
        let rows = layer_sweep_report(&out.report);
        assert_eq!(rows.len(), 4);
        assert!(rows.windows(2).all(|w| w[0].depth < w[1].depth));
        for (row, it) in rows[1..].iter().zip(&out.report.iterations) {
            assert_eq!(row.best_val_score, it.best_val_score);
        }
        let csv = layer_sweep_csv(&rows);
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("depth,best_val_score\n0,"));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let data = line_data();
        let mut cfg = SearchConfig::new(SearchSpace::mlp(data.train.rows()));
        cfg.evals_per_iteration = 0;
        assert!(matches!(gsnna_search(&cfg, &data, &mut |_| {}), Err(SearchError::Config(_))));
        cfg.evals_per_iteration = 1;
        cfg.score_threshold = 1.5;
        assert!(matches!(random_search(&cfg, &data, &mut |_| {}), Err(SearchError::Config(_))));
    }
}
