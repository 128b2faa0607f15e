//! Training loop, evaluation metrics and the multi-seed comparison harness.

pub mod compare;
pub mod early_stop;
pub mod metrics;
pub mod report;
mod trainer;

pub use compare::{compare, CompareOutcome, CompareSpec, CompareSummary, MeanStd, SummaryRow};
pub use early_stop::{run_with_early_stopping, EarlyStopping, Stopped, Verdict};
pub use metrics::{evaluate, f1_score, predicted_labels, ConfusionMatrix, EvalMetrics};
pub use report::MetricsReport;
pub use trainer::{
    good_probability, prediction_loss, train, validation_stats, EpochRecord, History, TrainConfig, TrainOutcome,
    Trainer, ValStats,
};

use thiserror::Error;

use crate::nn::NnError;
use crate::objective::{LossBreakdown, ObjectiveError, QualityLabel};
use crate::synthetic::{Dataset, Grade, SyntheticError};
use crate::tensor::TensorError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("{0} split is empty")]
    EmptySplit(&'static str),
    #[error("input width {data} does not match model input {model}")]
    InputDim { model: usize, data: usize },
    #[error(
        "non-finite loss at epoch {epoch}, batch {batch}: pred={} compl={} mono={} total={}",
        loss.pred, loss.compl, loss.mono, loss.total
    )]
    NonFinite {
        epoch: usize,
        batch: usize,
        loss: LossBreakdown,
    },
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Data(#[from] SyntheticError),
}

/// Flattened images with binary labels, ready for batching.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    dim: usize,
    inputs: Vec<f64>,
    labels: Vec<QualityLabel>,
}

impl LabeledSet {
    pub fn new(dim: usize, inputs: Vec<f64>, labels: Vec<QualityLabel>) -> Result<Self, TrainError> {
        if dim == 0 || inputs.len() != dim * labels.len() {
            return Err(TrainError::InputDim {
                model: dim,
                data: inputs.len().checked_div(labels.len()).unwrap_or(0),
            });
        }
        Ok(Self { dim, inputs, labels })
    }

    /// Selects `indices` from `dataset`, labelling each image through `label`.
    pub fn from_dataset_with(dataset: &Dataset, indices: &[usize], label: impl Fn(Grade) -> QualityLabel) -> Self {
        let dim = dataset.pixel_count();
        let mut inputs = Vec::with_capacity(indices.len() * dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            let s = &dataset.samples[i];
            inputs.extend(s.pixels.iter().map(|&p| p as f64));
            labels.push(label(s.grade));
        }
        Self { dim, inputs, labels }
    }

    /// Standard mapping: Good stays Good, Limited and Poor become Deficient.
    pub fn from_dataset(dataset: &Dataset, indices: &[usize]) -> Self {
        Self::from_dataset_with(dataset, indices, Grade::label)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    pub fn labels(&self) -> &[QualityLabel] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn gather(&self, indices: &[usize]) -> (Vec<f64>, Vec<QualityLabel>) {
        let mut inputs = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            inputs.extend_from_slice(self.row(i));
        }
        (inputs, indices.iter().map(|&i| self.labels[i]).collect())
    }

    pub fn subset_where(&self, keep: impl Fn(QualityLabel) -> bool) -> Self {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(self.labels[i])).collect();
        let (inputs, labels) = self.gather(&idx);
        Self {
            dim: self.dim,
            inputs,
            labels,
        }
    }
}
