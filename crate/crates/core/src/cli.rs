//! The `miqa-pns` command line: `generate`, `train`, `eval` and `compare`.
//!
//! Settings resolve in order: built-in defaults, the `--config` file, each
//! `--set key=value`, then the dedicated flags. Exit codes: 0 on success, 2
//! for usage, configuration and input errors, 3 when training hits a
//! non-finite loss, 1 for any other failure (such as an unwritable output).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::nn::checkpoint::{self, CheckpointError, LoadMode};
use crate::synthetic::{make_split, metadata_text, Dataset, Grade, SyntheticError};
use crate::train::{compare, evaluate, report, train, LabeledSet, MetricsReport, TrainError};

pub const DATASET_FILE: &str = "dataset.pnsa";
pub const METADATA_FILE: &str = "dataset.pnsa.meta";
pub const CHECKPOINT_FILE: &str = "model.pnsm";
pub const INFERENCE_CHECKPOINT_FILE: &str = "model.inference.pnsm";
pub const METRICS_FILE: &str = "metrics.txt";
pub const EVAL_FILE: &str = "eval.txt";
pub const COMPARE_CSV_FILE: &str = "compare.csv";
pub const SUMMARY_FILE: &str = "summary.txt";

#[derive(Debug, Parser)]
#[command(name = "miqa-pns", version, about = "Train and compare PNS-regularised image-quality classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset into the output directory.
    Generate(CommonArgs),
    /// Train on a dataset's split and write checkpoints plus a metrics document.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a dataset's test split.
    Eval(EvalArgs),
    /// Train the reference and candidate modes over several seeds.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Config file of `key = value` lines.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Overwrite existing outputs.
    #[arg(long)]
    pub force: bool,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_name = "PATH")]
    pub dataset: Option<PathBuf>,
    /// `baseline` or `miqa-pns`.
    #[arg(long)]
    pub mode: Option<String>,
    /// `iid`, `limited-holdout` or `poor-holdout`.
    #[arg(long)]
    pub scenario: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_name = "PATH")]
    pub dataset: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub scenario: Option<String>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long, value_name = "N")]
    pub n_seeds: Option<usize>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{} already exists (pass --force to overwrite)", .0.display())]
    Exists(PathBuf),
    #[error("{}: {source}", path.display())]
    Input {
        path: PathBuf,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error(transparent)]
    Data(#[from] SyntheticError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error("cannot write {}: {source}", path.display())]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Train(TrainError::NonFinite { .. }) => 3,
            CliError::Output { .. } => 1,
            _ => 2,
        }
    }
}

fn resolve(common: &CommonArgs, flags: &[(&str, Option<String>)]) -> Result<RunConfig, CliError> {
    let mut config = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    for pair in &common.overrides {
        config.set_pair(pair)?;
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(out) = &common.out {
        config.out = out.clone();
    }
    for (key, value) in flags {
        if let Some(v) = value {
            config.set(key, v)?;
        }
    }
    Ok(config)
}

fn path_flag(p: &Option<PathBuf>) -> Option<String> {
    p.as_ref().map(|p| p.display().to_string())
}

/// Creates the output directory and refuses to clobber `files` unless forced.
fn prepare_out(config: &RunConfig, files: &[&str], force: bool) -> Result<Vec<PathBuf>, CliError> {
    let paths: Vec<PathBuf> = files.iter().map(|f| config.out.join(f)).collect();
    if !force {
        if let Some(p) = paths.iter().find(|p| p.exists()) {
            return Err(CliError::Exists(p.clone()));
        }
    }
    fs::create_dir_all(&config.out).map_err(|source| CliError::Output {
        path: config.out.clone(),
        source,
    })?;
    Ok(paths)
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Output {
        path: path.to_path_buf(),
        source,
    })
}

fn input_error(path: &Path, e: impl std::error::Error + Send + Sync + 'static) -> CliError {
    CliError::Input {
        path: path.to_path_buf(),
        source: Box::new(e),
    }
}

fn require<'a>(p: &'a Option<PathBuf>, key: &str) -> Result<&'a Path, CliError> {
    let path = p
        .as_deref()
        .ok_or_else(|| CliError::Usage(format!("no {key} given (use --{key} or set '{key}')")))?;
    if !path.is_file() {
        return Err(CliError::Usage(format!("{key} file {} not found", path.display())));
    }
    Ok(path)
}

fn load_dataset(config: &RunConfig) -> Result<Dataset, CliError> {
    let path = require(&config.dataset, "dataset")?;
    Dataset::load(path).map_err(|e| input_error(path, e))
}

/// The dataset's train/val/test sets under the configured scenario and seed.
fn split_sets(config: &RunConfig, dataset: &Dataset) -> Result<[LabeledSet; 3], CliError> {
    let split = make_split(&dataset.grades(), config.scenario, config.seed)?;
    Ok([&split.train, &split.val, &split.test].map(|idx| LabeledSet::from_dataset(dataset, idx)))
}

/// Runs a parsed command, writing progress lines to `log`.
pub fn run(cli: Cli, log: &mut impl std::io::Write) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(common) => cmd_generate(&resolve(&common, &[])?, common.force, log),
        Command::Train(a) => {
            let config = resolve(
                &a.common,
                &[
                    ("dataset", path_flag(&a.dataset)),
                    ("train.mode", a.mode),
                    ("scenario", a.scenario),
                ],
            )?;
            cmd_train(&config, a.common.force, log)
        }
        Command::Eval(a) => {
            let config = resolve(
                &a.common,
                &[
                    ("dataset", path_flag(&a.dataset)),
                    ("checkpoint", path_flag(&a.checkpoint)),
                    ("scenario", a.scenario),
                ],
            )?;
            cmd_eval(&config, a.common.force, log)
        }
        Command::Compare(a) => {
            let config = resolve(
                &a.common,
                &[("scenario", a.scenario), ("n_seeds", a.n_seeds.map(|n| n.to_string()))],
            )?;
            cmd_compare(&config, a.common.force, log)
        }
    }
}

pub fn cmd_generate(config: &RunConfig, force: bool, log: &mut impl std::io::Write) -> Result<(), CliError> {
    let generator = config.generator_config();
    generator.proportions.validate()?;
    let paths = prepare_out(config, &[DATASET_FILE, METADATA_FILE], force)?;
    let dataset = Dataset::generate(&generator)?;
    let counts = dataset.grade_counts();
    write(&paths[0], dataset.to_bytes())?;
    write(
        &paths[1],
        format!("{}\n[config]\n{}", metadata_text(&generator, counts), config.to_text()),
    )?;
    for g in Grade::ALL {
        let _ = writeln!(log, "{}: {}", g, counts[g as usize]);
    }
    let _ = writeln!(log, "wrote {}", paths[0].display());
    Ok(())
}

pub fn cmd_train(config: &RunConfig, force: bool, log: &mut impl std::io::Write) -> Result<(), CliError> {
    let dataset = load_dataset(config)?;
    let [train_set, val_set, test_set] = split_sets(config, &dataset)?;
    let paths = prepare_out(config, &[CHECKPOINT_FILE, INFERENCE_CHECKPOINT_FILE, METRICS_FILE], force)?;
    let train_config = config.train_config();
    let outcome = train(&train_config, &train_set, &val_set)?;
    let metrics = evaluate(&outcome.model, &test_set)?;
    let report = MetricsReport {
        seed: config.seed,
        mode: train_config.mode,
        scenario: config.scenario,
        metrics,
        history: Some(outcome.history),
    };
    write(&paths[0], checkpoint::to_bytes(&outcome.model))?;
    write(&paths[1], checkpoint::to_bytes(&outcome.model.clone().into_inference()))?;
    write(&paths[2], report.to_document(&config.to_text()))?;
    let _ = writeln!(
        log,
        "epochs {} (best {}), test f1 {:.4}, deficient accuracy {:.4}",
        report.epochs_trained(),
        report.history.as_ref().map_or(0, |h| h.best_epoch),
        report.metrics.f1,
        report.metrics.deficient_accuracy
    );
    let _ = writeln!(log, "wrote {}", paths[2].display());
    Ok(())
}

pub fn cmd_eval(config: &RunConfig, force: bool, log: &mut impl std::io::Write) -> Result<(), CliError> {
    let ckpt = require(&config.checkpoint, "checkpoint")?;
    let model = checkpoint::load(ckpt, LoadMode::Full).map_err(|e: CheckpointError| input_error(ckpt, e))?;
    let dataset = load_dataset(config)?;
    let [_, _, test_set] = split_sets(config, &dataset)?;
    let paths = prepare_out(config, &[EVAL_FILE], force)?;
    let report = MetricsReport {
        seed: config.seed,
        mode: config.train.mode,
        scenario: config.scenario,
        metrics: evaluate(&model, &test_set)?,
        history: None,
    };
    write(&paths[0], report.to_document(&config.to_text()))?;
    let m = &report.metrics;
    let _ = writeln!(
        log,
        "precision {:.4} recall {:.4} f1 {:.4} deficient accuracy {:.4}",
        m.precision, m.recall, m.f1, m.deficient_accuracy
    );
    let _ = writeln!(log, "wrote {}", paths[0].display());
    Ok(())
}

pub fn cmd_compare(config: &RunConfig, force: bool, log: &mut impl std::io::Write) -> Result<(), CliError> {
    let spec = config.compare_spec();
    spec.generator.proportions.validate()?;
    let paths = prepare_out(config, &[COMPARE_CSV_FILE, SUMMARY_FILE], force)?;
    let outcome = compare(&spec)?;
    let mut csv_bytes = Vec::new();
    report::write_csv(&mut csv_bytes, &outcome.reports()).map_err(|e| CliError::Output {
        path: paths[0].clone(),
        source: std::io::Error::other(e),
    })?;
    write(&paths[0], csv_bytes)?;
    let summary = outcome
        .summary
        .to_text(config.reference_mode.as_str(), config.candidate_mode.as_str());
    let mut doc = String::new();
    let _ = writeln!(doc, "# miqa-pns comparison");
    let _ = writeln!(doc, "format_version: {}", report::DOCUMENT_VERSION);
    let _ = writeln!(doc, "\n[config]");
    doc.push_str(&config.to_text());
    let _ = writeln!(doc, "\n[summary]");
    doc.push_str(&summary);
    write(&paths[1], doc)?;
    let _ = log.write_all(summary.as_bytes());
    let _ = writeln!(log, "wrote {}", paths[0].display());
    Ok(())
}
