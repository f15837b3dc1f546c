//! Training objectives: mean squared error for regression, cross-entropy for classification.

use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::error::ShapeError;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Regression,
    Classification,
}

impl Task {
    pub fn output_activation(self) -> Activation {
        match self {
            Task::Regression => Activation::Identity,
            Task::Classification => Activation::Softmax,
        }
    }

    /// Name of the score that drives model selection for this task.
    pub fn metric_name(self) -> &'static str {
        match self {
            Task::Regression => "r2",
            Task::Classification => "f1",
        }
    }
}

const MIN_PROB: f64 = 1e-300;

/// Mean loss over a batch. For classification `y_hat` holds probabilities and `y` one-hot rows.
pub fn loss(task: Task, y_hat: &Tensor, y: &Tensor) -> Result<f64, ShapeError> {
    if y_hat.shape() != y.shape() {
        return Err(ShapeError::new(format!("prediction shape {:?} vs target shape {:?}", y_hat.shape(), y.shape())));
    }
    Ok(loss_slices(task, y_hat.data(), y.data(), y.rows()))
}

pub(crate) fn loss_slices(task: Task, y_hat: &[f64], y: &[f64], rows: usize) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    match task {
        Task::Regression => {
            let sum: f64 = y_hat.iter().zip(y).map(|(p, t)| (p - t) * (p - t)).sum();
            sum / y.len() as f64
        }
        Task::Classification => {
            let sum: f64 = y_hat.iter().zip(y).filter(|(_, &t)| t != 0.0).map(|(&p, &t)| -t * p.max(MIN_PROB).ln()).sum();
            // -0.0 when every true-class probability is exactly 1
            (sum / rows as f64).max(0.0)
        }
    }
}

/// Gradient of the mean loss with respect to the output layer's pre-activations.
pub(crate) fn output_delta(task: Task, y_hat: &[f64], y: &[f64], rows: usize) -> Vec<f64> {
    match task {
        Task::Regression => {
            let scale = 2.0 / y.len() as f64;
            y_hat.iter().zip(y).map(|(p, t)| scale * (p - t)).collect()
        }
        Task::Classification => {
            let scale = 1.0 / rows as f64;
            y_hat.iter().zip(y).map(|(p, t)| scale * (p - t)).collect()
        }
    }
}
