use std::fmt::Write as _;

use rayon::prelude::*;

use super::{evaluate, train, LabeledSet, MetricsReport, TrainConfig, TrainError};
use crate::synthetic::{make_split, Dataset, GeneratorConfig, Scenario};

/// Paired multi-seed experiment: two training configs on identical data.
#[derive(Debug, Clone)]
pub struct CompareSpec {
    pub generator: GeneratorConfig,
    pub scenario: Scenario,
    pub n_seeds: usize,
    /// Seeds run are `base_seed .. base_seed + n_seeds`; each seeds data
    /// generation, the split and both training runs.
    pub base_seed: u64,
    pub reference: TrainConfig,
    pub candidate: TrainConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    /// `None` for an empty slice.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, std, n })
    }
}

/// Metric columns summarised by [`CompareSummary`].
pub const SUMMARY_METRICS: [&str; 6] = [
    "precision",
    "recall",
    "f1",
    "deficient_accuracy",
    "pns_proxy",
    "mono_violation",
];

fn metric(r: &MetricsReport, name: &str) -> Option<f64> {
    let m = &r.metrics;
    match name {
        "precision" => Some(m.precision),
        "recall" => Some(m.recall),
        "f1" => Some(m.f1),
        "deficient_accuracy" => Some(m.deficient_accuracy),
        "pns_proxy" => m.pns_proxy,
        "mono_violation" => m.mono_violation,
        _ => None,
    }
}

/// (name, reference, candidate, paired candidate - reference).
pub type SummaryRow = (&'static str, Option<MeanStd>, Option<MeanStd>, Option<MeanStd>);

#[derive(Debug, Clone, PartialEq)]
pub struct CompareSummary {
    pub rows: Vec<SummaryRow>,
}

impl CompareSummary {
    pub fn from_pairs(pairs: &[(MetricsReport, MetricsReport)]) -> Self {
        let rows = SUMMARY_METRICS
            .iter()
            .map(|&name| {
                let reference: Vec<f64> = pairs.iter().filter_map(|(r, _)| metric(r, name)).collect();
                let candidate: Vec<f64> = pairs.iter().filter_map(|(_, c)| metric(c, name)).collect();
                let deltas: Vec<f64> = pairs
                    .iter()
                    .filter_map(|(r, c)| Some(metric(c, name)? - metric(r, name)?))
                    .collect();
                (
                    name,
                    MeanStd::of(&reference),
                    MeanStd::of(&candidate),
                    MeanStd::of(&deltas),
                )
            })
            .collect();
        Self { rows }
    }

    pub fn get(&self, name: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.0 == name)
    }

    pub fn to_text(&self, reference_mode: &str, candidate_mode: &str) -> String {
        let fmt = |m: &Option<MeanStd>| m.map_or_else(|| "NA".to_string(), |m| format!("{:.4} ± {:.4}", m.mean, m.std));
        let mut s = String::new();
        for (label, pick) in [(reference_mode, 0usize), (candidate_mode, 1)] {
            let _ = write!(s, "{label}:");
            for (name, r, c, _) in &self.rows {
                let _ = write!(s, " {name}={}", fmt(if pick == 0 { r } else { c }));
            }
            s.push('\n');
        }
        let _ = write!(s, "delta ({candidate_mode} - {reference_mode}):");
        for (name, _, _, d) in &self.rows {
            let _ = write!(s, " {name}={}", fmt(d));
        }
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone)]
pub struct CompareOutcome {
    /// One (reference, candidate) pair per seed, in seed order.
    pub pairs: Vec<(MetricsReport, MetricsReport)>,
    pub summary: CompareSummary,
}

impl CompareOutcome {
    /// Rows in CSV order: per seed, reference then candidate.
    pub fn reports(&self) -> Vec<MetricsReport> {
        self.pairs.iter().flat_map(|(r, c)| [r.clone(), c.clone()]).collect()
    }
}

fn run_one(
    config: &TrainConfig,
    seed: u64,
    scenario: Scenario,
    train_set: &LabeledSet,
    val_set: &LabeledSet,
    test_set: &LabeledSet,
) -> Result<MetricsReport, TrainError> {
    let config = TrainConfig {
        seed,
        ..config.clone()
    };
    let outcome = train(&config, train_set, val_set)?;
    Ok(MetricsReport {
        seed,
        mode: config.mode,
        scenario,
        metrics: evaluate(&outcome.model, test_set)?,
        history: Some(outcome.history),
    })
}

/// Runs both configs for every seed. Cells run in parallel; results are
/// returned in seed order.
pub fn compare(spec: &CompareSpec) -> Result<CompareOutcome, TrainError> {
    if spec.n_seeds == 0 {
        return Err(TrainError::Config("n_seeds must be >= 1".into()));
    }
    spec.reference.validate()?;
    spec.candidate.validate()?;
    let pairs = (0..spec.n_seeds as u64)
        .into_par_iter()
        .map(|i| {
            let seed = spec.base_seed + i;
            let dataset = Dataset::generate(&GeneratorConfig {
                seed,
                ..spec.generator.clone()
            })?;
            let split = make_split(&dataset.grades(), spec.scenario, seed)?;
            let train_set = LabeledSet::from_dataset(&dataset, &split.train);
            let val_set = LabeledSet::from_dataset(&dataset, &split.val);
            let test_set = LabeledSet::from_dataset(&dataset, &split.test);
            let (reference, candidate) = rayon::join(
                || run_one(&spec.reference, seed, spec.scenario, &train_set, &val_set, &test_set),
                || run_one(&spec.candidate, seed, spec.scenario, &train_set, &val_set, &test_set),
            );
            Ok((reference?, candidate?))
        })
        .collect::<Result<Vec<_>, TrainError>>()?;
    let summary = CompareSummary::from_pairs(&pairs);
    Ok(CompareOutcome { pairs, summary })
}
