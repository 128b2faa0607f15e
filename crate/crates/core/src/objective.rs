//! Prediction, complement and monotonicity losses, and the reporting
//! statistics derived from the two prediction branches.
//!
//! For a batch with labels `y`, predictor logits `z = F(E(x))` and complement
//! logits `zc = F(E^c(x))`, per sample:
//!
//! ```text
//! pred_i  = CE(z_i, y_i)
//! compl_i = I(y_i) * CE(zc_i, T(y_i))
//! mono_i  = lambda * I(y_i) * pred_i * compl_i
//! ```
//!
//! where `I` is 1 for Good and `T` swaps the two classes. Each component is
//! the batch mean of its per-sample values and `total = pred + compl + mono`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::tensor::{Tape, TensorError, TensorId};

/// Binary task label. `Good = 0`, `Deficient = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QualityLabel {
    Good = 0,
    Deficient = 1,
}

impl QualityLabel {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Self::Good),
            1 => Some(Self::Deficient),
            _ => None,
        }
    }

    /// The label transform: always the other class.
    pub fn transform(self) -> Self {
        match self {
            Self::Good => Self::Deficient,
            Self::Deficient => Self::Good,
        }
    }

    /// 1 for Good, 0 otherwise.
    pub fn indicator(self) -> f64 {
        match self {
            Self::Good => 1.0,
            Self::Deficient => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Prediction loss only.
    Baseline,
    /// Prediction + complement + monotonicity losses.
    MiqaPns,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Baseline => "baseline",
            Mode::MiqaPns => "miqa-pns",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "baseline" => Ok(Mode::Baseline),
            "miqa-pns" => Ok(Mode::MiqaPns),
            other => Err(format!("unknown mode '{other}' (expected baseline or miqa-pns)")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("empty batch")]
    EmptyBatch,
    #[error("batch size mismatch: {logits} logit rows, {labels} labels")]
    BatchMismatch { logits: usize, labels: usize },
    #[error("logits must be [batch, 2], got {0:?}")]
    LogitShape(Vec<usize>),
    #[error("lambda must be finite and non-negative, got {0}")]
    NegativeLambda(f64),
    #[error("miqa-pns mode needs complement logits")]
    MissingComplement,
    #[error("probability arrays are empty (no Good samples)")]
    NoSamples,
    #[error("probability arrays differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("probability {0} outside [0, 1]")]
    NotAProbability(f64),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Scalar values of the loss components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub pred: f64,
    pub compl: f64,
    pub mono: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn is_finite(&self) -> bool {
        self.pred.is_finite() && self.compl.is_finite() && self.mono.is_finite() && self.total.is_finite()
    }
}

/// The loss values together with the tape node to differentiate.
#[derive(Debug, Clone, Copy)]
pub struct TaskLoss {
    pub breakdown: LossBreakdown,
    pub total: TensorId,
}

fn check_logits(tape: &Tape, logits: TensorId, labels: &[QualityLabel]) -> Result<(), ObjectiveError> {
    if labels.is_empty() {
        return Err(ObjectiveError::EmptyBatch);
    }
    let shape = tape.tensor(logits)?.shape();
    if shape.len() != 2 || shape[1] != 2 {
        return Err(ObjectiveError::LogitShape(shape.to_vec()));
    }
    if shape[0] != labels.len() {
        return Err(ObjectiveError::BatchMismatch {
            logits: shape[0],
            labels: labels.len(),
        });
    }
    Ok(())
}

/// Per-sample `-log_softmax(logits)[label]`, shape `[batch]`.
pub fn per_sample_cross_entropy(
    tape: &mut Tape,
    logits: TensorId,
    labels: &[QualityLabel],
) -> Result<TensorId, ObjectiveError> {
    check_logits(tape, logits, labels)?;
    let log_p = tape.log_softmax(logits)?;
    let picked = tape.select_index(log_p, labels.iter().map(|l| l.index()).collect())?;
    Ok(tape.scalar_mul(picked, -1.0)?)
}

/// Batch-mean cross-entropy.
pub fn cross_entropy(tape: &mut Tape, logits: TensorId, labels: &[QualityLabel]) -> Result<TensorId, ObjectiveError> {
    let per_sample = per_sample_cross_entropy(tape, logits, labels)?;
    Ok(tape.mean(per_sample)?)
}

/// Records the task loss for `mode` on `tape`.
///
/// In baseline mode `logits_compl` is ignored (and may be `None`); the
/// returned node is the plain cross-entropy and `compl == mono == 0`.
pub fn task_loss(
    tape: &mut Tape,
    logits_pred: TensorId,
    logits_compl: Option<TensorId>,
    labels: &[QualityLabel],
    lambda: f64,
    mode: Mode,
) -> Result<TaskLoss, ObjectiveError> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(ObjectiveError::NegativeLambda(lambda));
    }
    let pred_i = per_sample_cross_entropy(tape, logits_pred, labels)?;
    let pred = tape.mean(pred_i)?;
    let pred_v = tape.scalar(pred);

    if mode == Mode::Baseline {
        return Ok(TaskLoss {
            breakdown: LossBreakdown {
                pred: pred_v,
                compl: 0.0,
                mono: 0.0,
                total: pred_v,
            },
            total: pred,
        });
    }

    let logits_compl = logits_compl.ok_or(ObjectiveError::MissingComplement)?;
    let flipped: Vec<QualityLabel> = labels.iter().map(|l| l.transform()).collect();
    let ce_compl = per_sample_cross_entropy(tape, logits_compl, &flipped)?;
    let gate = tape.constant(vec![labels.len()], labels.iter().map(|l| l.indicator()).collect())?;
    let compl_i = tape.mul(ce_compl, gate)?;
    let compl = tape.mean(compl_i)?;

    let product = tape.mul(pred_i, compl_i)?;
    let product_mean = tape.mean(product)?;
    let mono = tape.scalar_mul(product_mean, lambda)?;

    let partial = tape.add(pred, compl)?;
    let total = tape.add(partial, mono)?;
    Ok(TaskLoss {
        breakdown: LossBreakdown {
            pred: pred_v,
            compl: tape.scalar(compl),
            mono: tape.scalar(mono),
            total: tape.scalar(total),
        },
        total,
    })
}

/// Softmax probability of Good for each row of `[batch, 2]` logits.
pub fn good_probabilities(logits: &[f64]) -> Vec<f64> {
    logits
        .chunks_exact(2)
        .map(|row| {
            let max = row[0].max(row[1]);
            let e0 = (row[0] - max).exp();
            let e1 = (row[1] - max).exp();
            e0 / (e0 + e1)
        })
        .collect()
}

fn check_probabilities(p: &[f64], p_bar: &[f64]) -> Result<(), ObjectiveError> {
    if p.len() != p_bar.len() {
        return Err(ObjectiveError::LengthMismatch(p.len(), p_bar.len()));
    }
    if p.is_empty() {
        return Err(ObjectiveError::NoSamples);
    }
    if let Some(&bad) = p.iter().chain(p_bar).find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(ObjectiveError::NotAProbability(bad));
    }
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Empirical PNS proxy: `mean(P(Good | h)) - mean(P(Good | h_bar))` over Good samples.
pub fn pns_estimate(p_good_h: &[f64], p_good_hbar: &[f64]) -> Result<f64, ObjectiveError> {
    check_probabilities(p_good_h, p_good_hbar)?;
    Ok(mean(p_good_h) - mean(p_good_hbar))
}

/// Mean of `(1 - P(Good | h)) * P(Good | h_bar)` over Good samples.
///
/// Zero iff the monotonicity product vanishes on every sample. Each term lies
/// in `[0, 1]`; it is at most 0.25 when the two probabilities are equal.
pub fn monotonicity_violation(p_good_h: &[f64], p_good_hbar: &[f64]) -> Result<f64, ObjectiveError> {
    check_probabilities(p_good_h, p_good_hbar)?;
    let terms: Vec<f64> = p_good_h
        .iter()
        .zip(p_good_hbar)
        .map(|(p, q)| (1.0 - p) * q)
        .collect();
    Ok(mean(&terms))
}
