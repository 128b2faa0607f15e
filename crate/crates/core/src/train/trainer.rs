use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::early_stop::run_with_early_stopping;
use super::metrics::pns_statistics;
use super::{LabeledSet, TrainError};
use crate::derive_seed;
use crate::nn::{Adam, ModelTriple, TripleSpec};
use crate::objective::{good_probabilities, task_loss, LossBreakdown, Mode, QualityLabel};
use crate::tensor::Tape;

/// Hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub mode: Mode,
    pub lambda: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub extractor_hidden: Vec<usize>,
    pub feature_dim: usize,
    pub predictor_hidden: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mode: Mode::MiqaPns,
            lambda: 1.0,
            lr: 1e-4,
            batch_size: 32,
            max_epochs: 200,
            patience: 15,
            seed: 0,
            extractor_hidden: vec![128],
            feature_dim: 64,
            predictor_hidden: vec![256, 64],
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |msg: String| Err(TrainError::Config(msg));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be >= 0, got {}", self.lambda));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be > 0, got {}", self.lr));
        }
        if self.patience < 1 {
            return bad("patience must be >= 1".into());
        }
        if self.batch_size < 1 || self.max_epochs < 1 {
            return bad("batch_size and max_epochs must be >= 1".into());
        }
        if self.feature_dim == 0 || self.extractor_hidden.contains(&0) || self.predictor_hidden.contains(&0) {
            return bad("network widths must be >= 1".into());
        }
        Ok(())
    }

    pub fn triple_spec(&self, input_dim: usize) -> TripleSpec {
        TripleSpec {
            input_dim,
            extractor_hidden: self.extractor_hidden.clone(),
            feature_dim: self.feature_dim,
            predictor_hidden: self.predictor_hidden.clone(),
        }
    }
}

/// Validation-set statistics after an epoch (or at initialization).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValStats {
    /// Mean prediction loss; the early-stopping monitor.
    pub pred: f64,
    pub pns_proxy: Option<f64>,
    pub mono_violation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Sample-weighted mean of the training batch losses.
    pub train: LossBreakdown,
    pub val: ValStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct History {
    pub initial: ValStats,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub epochs_trained: usize,
}

impl History {
    pub fn best(&self) -> Option<&EpochRecord> {
        self.epochs.iter().find(|r| r.epoch == self.best_epoch)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Weights from the best validation epoch.
    pub model: ModelTriple,
    pub history: History,
}

/// Optimizer state plus the model it updates. One Adam instance covers `E`,
/// `E^c` and `F`.
#[derive(Debug, Clone)]
pub struct Trainer {
    config: TrainConfig,
    model: ModelTriple,
    adam: Adam,
    shuffle_rng: ChaCha8Rng,
    zero_complement_grads: Vec<Vec<f64>>,
    epoch: usize,
    batch: usize,
}

impl Trainer {
    pub fn new(config: TrainConfig, input_dim: usize) -> Result<Self, TrainError> {
        config.validate()?;
        let model = ModelTriple::init(&config.triple_spec(input_dim), config.seed)?;
        let adam = Adam::new(config.lr, model.params().map(|p| p.len()));
        let zero_complement_grads = model
            .complement
            .iter()
            .flat_map(|m| m.params())
            .map(|p| vec![0.0; p.len()])
            .collect();
        Ok(Self {
            shuffle_rng: ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 0x7368_7566)),
            config,
            model,
            adam,
            zero_complement_grads,
            epoch: 0,
            batch: 0,
        })
    }

    pub fn model(&self) -> &ModelTriple {
        &self.model
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    /// One forward/backward pass and one Adam update on a batch.
    pub fn step(&mut self, inputs: &[f64], labels: &[QualityLabel]) -> Result<LossBreakdown, TrainError> {
        let dim = self.model.input_dim();
        if labels.is_empty() || inputs.len() != labels.len() * dim {
            return Err(TrainError::InputDim {
                model: dim,
                data: if labels.is_empty() { 0 } else { inputs.len() / labels.len() },
            });
        }
        let mut tape = Tape::new();
        let x = tape.constant(vec![labels.len(), dim], inputs.to_vec())?;
        let extractor = self.model.extractor.bind(&mut tape)?;
        let predictor = self.model.predictor.bind(&mut tape)?;
        let features = extractor.forward(&mut tape, x)?;
        let logits = predictor.forward(&mut tape, features)?;

        let complement = match (self.config.mode, &self.model.complement) {
            (Mode::MiqaPns, Some(ec)) => {
                let bound = ec.bind(&mut tape)?;
                let hc = bound.forward(&mut tape, x)?;
                let zc = predictor.forward(&mut tape, hc)?;
                Some((bound, zc))
            }
            (Mode::MiqaPns, None) => return Err(crate::nn::NnError::NoComplement.into()),
            (Mode::Baseline, _) => None,
        };

        let loss = task_loss(
            &mut tape,
            logits,
            complement.as_ref().map(|(_, zc)| *zc),
            labels,
            self.config.lambda,
            self.config.mode,
        )?;
        if !loss.breakdown.is_finite() {
            return Err(TrainError::NonFinite {
                epoch: self.epoch,
                batch: self.batch + 1,
                loss: loss.breakdown,
            });
        }
        tape.backward(loss.total)?;

        let mut grads = extractor.gradients(&tape);
        match &complement {
            Some((bound, _)) => grads.extend(bound.gradients(&tape)),
            None => grads.extend(self.zero_complement_grads.iter().map(|g| Some(g.as_slice()))),
        }
        grads.extend(predictor.gradients(&tape));
        self.adam.step(self.model.params_mut(), &grads)?;
        self.batch += 1;
        Ok(loss.breakdown)
    }

    /// Shuffles `set` and runs one pass of mini-batch updates.
    pub fn run_epoch(&mut self, set: &LabeledSet) -> Result<LossBreakdown, TrainError> {
        if set.is_empty() {
            return Err(TrainError::EmptySplit("train"));
        }
        self.epoch += 1;
        self.batch = 0;
        let mut order: Vec<usize> = (0..set.len()).collect();
        order.shuffle(&mut self.shuffle_rng);
        let mut sums = [0.0; 4];
        for chunk in order.chunks(self.config.batch_size) {
            let (inputs, labels) = set.gather(chunk);
            let b = self.step(&inputs, &labels)?;
            let w = chunk.len() as f64;
            for (s, v) in sums.iter_mut().zip([b.pred, b.compl, b.mono, b.total]) {
                *s += w * v;
            }
        }
        let n = set.len() as f64;
        Ok(LossBreakdown {
            pred: sums[0] / n,
            compl: sums[1] / n,
            mono: sums[2] / n,
            total: sums[3] / n,
        })
    }
}

/// Mean cross-entropy of `F(E(x))`, the monitored validation loss.
pub fn prediction_loss(model: &ModelTriple, set: &LabeledSet) -> Result<f64, TrainError> {
    if set.is_empty() {
        return Err(TrainError::EmptySplit("validation"));
    }
    let logits = model.predict(set.inputs(), set.len())?;
    let total: f64 = logits
        .chunks_exact(2)
        .zip(set.labels())
        .map(|(z, l)| {
            let max = z[0].max(z[1]);
            let lse = max + ((z[0] - max).exp() + (z[1] - max).exp()).ln();
            lse - z[l.index()]
        })
        .sum();
    Ok(total / set.len() as f64)
}

pub fn validation_stats(model: &ModelTriple, set: &LabeledSet) -> Result<ValStats, TrainError> {
    let stats = pns_statistics(model, set)?;
    Ok(ValStats {
        pred: prediction_loss(model, set)?,
        pns_proxy: stats.map(|s| s.0),
        mono_violation: stats.map(|s| s.1),
    })
}

/// Trains with early stopping on validation prediction loss and returns the
/// best-epoch weights.
pub fn train(config: &TrainConfig, train_set: &LabeledSet, val_set: &LabeledSet) -> Result<TrainOutcome, TrainError> {
    if train_set.is_empty() {
        return Err(TrainError::EmptySplit("train"));
    }
    if val_set.is_empty() {
        return Err(TrainError::EmptySplit("validation"));
    }
    if train_set.dim() != val_set.dim() {
        return Err(TrainError::InputDim {
            model: train_set.dim(),
            data: val_set.dim(),
        });
    }
    let mut trainer = Trainer::new(config.clone(), train_set.dim())?;
    let initial = validation_stats(trainer.model(), val_set)?;
    let mut epochs = Vec::new();
    let stopped = run_with_early_stopping(config.max_epochs, config.patience, &mut trainer, |epoch, trainer| {
        let train = trainer.run_epoch(train_set)?;
        let val = validation_stats(trainer.model(), val_set)?;
        epochs.push(EpochRecord { epoch, train, val });
        Ok::<_, TrainError>(val.pred)
    })?;
    Ok(TrainOutcome {
        model: stopped.best_state.model,
        history: History {
            initial,
            epochs,
            best_epoch: stopped.best_epoch,
            epochs_trained: stopped.epochs_run,
        },
    })
}

/// Probability of Good under `F(E(x))` for each sample.
pub fn good_probability(model: &ModelTriple, set: &LabeledSet) -> Result<Vec<f64>, TrainError> {
    Ok(good_probabilities(&model.predict(set.inputs(), set.len())?))
}
