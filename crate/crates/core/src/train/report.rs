use std::fmt::Write as _;

use super::{EvalMetrics, History};
use crate::objective::Mode;
use crate::synthetic::Scenario;

pub const DOCUMENT_VERSION: u32 = 1;

/// Header of the comparison CSV.
pub const CSV_HEADER: [&str; 10] = [
    "seed",
    "mode",
    "scenario",
    "precision",
    "recall",
    "f1",
    "deficient_accuracy",
    "pns_proxy",
    "mono_violation",
    "epochs_trained",
];

/// Written in place of statistics that need `E^c` or Good samples.
pub const ABSENT: &str = "NA";

/// Everything reported about one run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub seed: u64,
    pub mode: Mode,
    pub scenario: Scenario,
    pub metrics: EvalMetrics,
    /// `None` for evaluation-only runs.
    pub history: Option<History>,
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| ABSENT.to_string(), |v| format!("{v:?}"))
}

impl MetricsReport {
    pub fn epochs_trained(&self) -> usize {
        self.history.as_ref().map_or(0, |h| h.epochs_trained)
    }

    pub fn csv_record(&self) -> [String; 10] {
        let m = &self.metrics;
        [
            self.seed.to_string(),
            self.mode.to_string(),
            self.scenario.to_string(),
            format!("{:?}", m.precision),
            format!("{:?}", m.recall),
            format!("{:?}", m.f1),
            format!("{:?}", m.deficient_accuracy),
            opt(m.pns_proxy),
            opt(m.mono_violation),
            self.epochs_trained().to_string(),
        ]
    }

    /// Plain-text document: header, the resolved config verbatim, metrics,
    /// then the per-epoch curves. Contains no timestamps.
    pub fn to_document(&self, resolved_config: &str) -> String {
        let m = &self.metrics;
        let c = &m.confusion;
        let mut s = String::new();
        let _ = writeln!(s, "# miqa-pns metrics");
        let _ = writeln!(s, "format_version: {DOCUMENT_VERSION}");
        let _ = writeln!(s, "seed: {}", self.seed);
        let _ = writeln!(s, "mode: {}", self.mode);
        let _ = writeln!(s, "scenario: {}", self.scenario);
        let _ = writeln!(s, "\n[config]");
        s.push_str(resolved_config);
        if !resolved_config.ends_with('\n') {
            s.push('\n');
        }
        let _ = writeln!(s, "\n[metrics]");
        let _ = writeln!(s, "n_samples: {}", m.n_samples);
        let _ = writeln!(s, "precision: {:?}", m.precision);
        let _ = writeln!(s, "recall: {:?}", m.recall);
        let _ = writeln!(s, "f1: {:?}", m.f1);
        let _ = writeln!(s, "deficient_accuracy: {:?}", m.deficient_accuracy);
        let _ = writeln!(s, "pns_proxy: {}", opt(m.pns_proxy));
        let _ = writeln!(s, "mono_violation: {}", opt(m.mono_violation));
        let _ = writeln!(
            s,
            "confusion: true_good={} false_good={} missed_good={} true_deficient={}",
            c.true_good, c.false_good, c.missed_good, c.true_deficient
        );
        let _ = writeln!(s, "epochs_trained: {}", self.epochs_trained());
        if let Some(h) = &self.history {
            let _ = writeln!(s, "best_epoch: {}", h.best_epoch);
            let _ = writeln!(s, "\n[history]");
            let _ = writeln!(
                s,
                "epoch 0: val_pred={:?} val_pns={} val_mono={}",
                h.initial.pred,
                opt(h.initial.pns_proxy),
                opt(h.initial.mono_violation)
            );
            for r in &h.epochs {
                let _ = writeln!(
                    s,
                    "epoch {}: train_pred={:?} train_compl={:?} train_mono={:?} train_total={:?} val_pred={:?} val_pns={} val_mono={}",
                    r.epoch,
                    r.train.pred,
                    r.train.compl,
                    r.train.mono,
                    r.train.total,
                    r.val.pred,
                    opt(r.val.pns_proxy),
                    opt(r.val.mono_violation)
                );
            }
        }
        s
    }
}

/// Writes `reports` as comparison CSV rows (with header) to `out`.
pub fn write_csv<W: std::io::Write>(out: W, reports: &[MetricsReport]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in reports {
        w.write_record(r.csv_record())?;
    }
    w.flush()?;
    Ok(())
}
