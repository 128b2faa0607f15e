use super::{LabeledSet, TrainError};
use crate::nn::ModelTriple;
use crate::objective::{good_probabilities, monotonicity_violation, pns_estimate, QualityLabel};

/// Confusion counts with Good as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub true_good: usize,
    pub false_good: usize,
    pub missed_good: usize,
    pub true_deficient: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ConfusionMatrix {
    pub fn from_predictions(predicted: &[QualityLabel], truth: &[QualityLabel]) -> Self {
        let mut cm = Self::default();
        for (p, t) in predicted.iter().zip(truth) {
            match (p, t) {
                (QualityLabel::Good, QualityLabel::Good) => cm.true_good += 1,
                (QualityLabel::Good, QualityLabel::Deficient) => cm.false_good += 1,
                (QualityLabel::Deficient, QualityLabel::Good) => cm.missed_good += 1,
                (QualityLabel::Deficient, QualityLabel::Deficient) => cm.true_deficient += 1,
            }
        }
        cm
    }

    /// 0 when nothing was predicted Good.
    pub fn precision(&self) -> f64 {
        ratio(self.true_good, self.true_good + self.false_good)
    }

    /// 0 when there are no Good samples.
    pub fn recall(&self) -> f64 {
        ratio(self.true_good, self.true_good + self.missed_good)
    }

    pub fn f1(&self) -> f64 {
        f1_score(self.precision(), self.recall())
    }

    /// Fraction of Deficient samples predicted Deficient; 0 when there are none.
    pub fn deficient_accuracy(&self) -> f64 {
        ratio(self.true_deficient, self.true_deficient + self.false_good)
    }
}

/// Harmonic mean `2PR / (P + R)`, 0 when `P + R == 0`.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Argmax over two logits; an exact tie goes to Good.
pub fn predicted_labels(logits: &[f64]) -> Vec<QualityLabel> {
    logits
        .chunks_exact(2)
        .map(|z| {
            if z[0] >= z[1] {
                QualityLabel::Good
            } else {
                QualityLabel::Deficient
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalMetrics {
    pub confusion: ConfusionMatrix,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub deficient_accuracy: f64,
    /// `None` without `E^c` or without Good samples.
    pub pns_proxy: Option<f64>,
    pub mono_violation: Option<f64>,
    pub n_samples: usize,
}

/// Classifies `set` with `F(E(x))`; PNS statistics also use `F(E^c(x))` when
/// the model still has its complement extractor.
pub fn evaluate(model: &ModelTriple, set: &LabeledSet) -> Result<EvalMetrics, TrainError> {
    if set.is_empty() {
        return Err(TrainError::EmptySplit("test"));
    }
    if set.dim() != model.input_dim() {
        return Err(TrainError::InputDim {
            model: model.input_dim(),
            data: set.dim(),
        });
    }
    let logits = model.predict(set.inputs(), set.len())?;
    let predicted = predicted_labels(&logits);
    let confusion = ConfusionMatrix::from_predictions(&predicted, set.labels());
    let (pns_proxy, mono_violation) = match pns_statistics(model, set)? {
        Some((p, m)) => (Some(p), Some(m)),
        None => (None, None),
    };
    Ok(EvalMetrics {
        confusion,
        precision: confusion.precision(),
        recall: confusion.recall(),
        f1: confusion.f1(),
        deficient_accuracy: confusion.deficient_accuracy(),
        pns_proxy,
        mono_violation,
        n_samples: set.len(),
    })
}

/// `(pns_proxy, mono_violation)` over the Good samples of `set`.
pub fn pns_statistics(model: &ModelTriple, set: &LabeledSet) -> Result<Option<(f64, f64)>, TrainError> {
    if model.complement.is_none() {
        return Ok(None);
    }
    let good = set.subset_where(|l| l == QualityLabel::Good);
    if good.is_empty() {
        return Ok(None);
    }
    let p = good_probabilities(&model.predict(good.inputs(), good.len())?);
    let p_bar = good_probabilities(&model.predict_complement(good.inputs(), good.len())?);
    Ok(Some((pns_estimate(&p, &p_bar)?, monotonicity_violation(&p, &p_bar)?)))
}
