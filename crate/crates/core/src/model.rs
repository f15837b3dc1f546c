//! Trained models of either family and their on-disk format.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conv::CnnArchitecture;
use crate::data::{Dataset, Standardizer};
use crate::error::MetricError;
use crate::loss::Task;
use crate::metrics::{accuracy, argmax_rows};
use crate::mlp::ArchitectureSpec;
use crate::network::{ModelParams, Network};
use crate::train::{score_outputs, TrainedModel};

pub const MODEL_FORMAT: &str = "gsnna-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "architecture", rename_all = "lowercase")]
pub enum Architecture {
    Mlp(ArchitectureSpec),
    Cnn(CnnArchitecture),
}

impl Architecture {
    pub fn task(&self) -> Task {
        match self {
            Self::Mlp(a) => a.task,
            Self::Cnn(a) => a.task,
        }
    }

    pub fn input_len(&self) -> usize {
        match self {
            Self::Mlp(a) => a.input_len(),
            Self::Cnn(a) => a.input_len(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Self::Mlp(a) => a.output_dim,
            Self::Cnn(a) => a.output_dim,
        }
    }

    /// Number of hidden (dense or convolutional) layers.
    pub fn depth(&self) -> usize {
        match self {
            Self::Mlp(a) => a.depth(),
            Self::Cnn(a) => a.depth(),
        }
    }

    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        match self {
            Self::Mlp(a) => a.param_shapes(),
            Self::Cnn(a) => a.param_shapes(),
        }
    }

    /// Inference outputs for `rows` row-major inputs.
    pub fn forward_rows(&self, params: &ModelParams, x: &[f64], rows: usize) -> Vec<f64> {
        match self {
            Self::Mlp(a) => a.forward_rows(params, x, rows, None),
            Self::Cnn(a) => a.forward_rows(params, x, rows, None),
        }
    }
}

/// A trained network of either family.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel {
    Mlp(TrainedModel<ArchitectureSpec>),
    Cnn(TrainedModel<CnnArchitecture>),
}

impl AnyModel {
    pub fn architecture(&self) -> Architecture {
        match self {
            Self::Mlp(m) => Architecture::Mlp(m.arch.clone()),
            Self::Cnn(m) => Architecture::Cnn(m.arch.clone()),
        }
    }

    pub fn params(&self) -> &ModelParams {
        match self {
            Self::Mlp(m) => &m.params,
            Self::Cnn(m) => &m.params,
        }
    }

    pub fn task(&self) -> Task {
        self.architecture().task()
    }

    pub fn best_val_score(&self) -> f64 {
        match self {
            Self::Mlp(m) => m.best_val_score,
            Self::Cnn(m) => m.best_val_score,
        }
    }

    /// Epochs actually run before stopping.
    pub fn stopped_epoch(&self) -> usize {
        match self {
            Self::Mlp(m) => m.stopped_epoch,
            Self::Cnn(m) => m.stopped_epoch,
        }
    }

    pub fn best_epoch(&self) -> usize {
        match self {
            Self::Mlp(m) => m.best_epoch,
            Self::Cnn(m) => m.best_epoch,
        }
    }

    pub fn score(&self, ds: &Dataset) -> Result<f64, MetricError> {
        match self {
            Self::Mlp(m) => m.score(ds),
            Self::Cnn(m) => m.score(ds),
        }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot access {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed model file: {0}")]
    Format(String),
    #[error("unsupported model format {format:?} version {version}")]
    Version { format: String, version: u32 },
    #[error("data has {found} features but the model expects {expected}")]
    FeatureMismatch { expected: usize, found: usize },
    #[error("{model:?} model cannot score {data:?} data")]
    TaskMismatch { model: Task, data: Task },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Self-describing persisted model: architecture, shaped parameters and the
/// normalisation fitted on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub format: String,
    pub version: u32,
    pub task: Task,
    pub metric: String,
    #[serde(flatten)]
    pub architecture: Architecture,
    pub params: ModelParams,
    pub standardizer: Standardizer,
    pub feature_names: Vec<String>,
    pub target_names: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<String>>,
}

/// Scores of a saved model on one dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub score: f64,
    pub accuracy: Option<f64>,
}

impl SavedModel {
    /// `reference` supplies column names and class labels (any split of the training data).
    pub fn new(model: &AnyModel, standardizer: Standardizer, reference: &Dataset) -> Self {
        let task = model.task();
        Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            task,
            metric: task.metric_name().into(),
            architecture: model.architecture(),
            params: model.params().clone(),
            standardizer,
            feature_names: reference.feature_names.clone(),
            target_names: reference.target_names.clone(),
            classes: reference.classes().map(<[String]>::to_vec),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ModelError::Format(e.to_string()))?;
        let format = value.get("format").and_then(|v| v.as_str()).unwrap_or_default().to_string();
        let version = value.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if format != MODEL_FORMAT || version != MODEL_VERSION {
            return Err(ModelError::Version { format, version });
        }
        let model: Self = serde_json::from_value(value).map_err(|e| ModelError::Format(e.to_string()))?;
        if model.params.shapes() != model.architecture.param_shapes().as_slice() {
            return Err(ModelError::Format("parameter shapes do not match the architecture".into()));
        }
        if model.architecture.task() != model.task {
            return Err(ModelError::Format("task field disagrees with the architecture".into()));
        }
        Ok(model)
    }

    /// Writes through a temporary file and renames it into place.
    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let io = |source| ModelError::Io { path: path.display().to_string(), source };
        let tmp = path.with_extension("json.tmp");
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(self.to_json().as_bytes()).map_err(io)?;
        f.sync_all().map_err(io)?;
        fs::rename(&tmp, path).map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text = fs::read_to_string(path).map_err(|source| ModelError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    /// Scores `raw` (in original units) after applying the stored normalisation.
    pub fn evaluate(&self, raw: &Dataset) -> Result<Evaluation, ModelError> {
        if raw.task() != self.task {
            return Err(ModelError::TaskMismatch { model: self.task, data: raw.task() });
        }
        if raw.feature_dim() != self.architecture.input_len() {
            return Err(ModelError::FeatureMismatch { expected: self.architecture.input_len(), found: raw.feature_dim() });
        }
        let ds = self.standardizer.transform(raw);
        let out = self.architecture.forward_rows(&self.params, ds.features(), ds.rows());
        let k = self.architecture.output_dim();
        let score = score_outputs(self.task, k, &out, &ds)?;
        let accuracy = match ds.labels() {
            Some(y) => Some(accuracy(y, &argmax_rows(&out, k))?),
            None => None,
        };
        Ok(Evaluation { score, accuracy })
    }
}
