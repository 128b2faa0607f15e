//! Flat `key = value` run configuration shared by every CLI command.
//!
//! Blank lines and lines starting with `#` are ignored. Every key has a
//! default, unknown keys are rejected, and [`RunConfig::to_text`] writes the
//! full resolved configuration back in a form [`RunConfig::from_text`] reads
//! losslessly.
//!
//! | key | default | meaning |
//! |-----|---------|---------|
//! | `seed` | 0 | data generation, splitting and training seed (first seed for `compare`) |
//! | `scenario` | `iid` | `iid`, `limited-holdout` or `poor-holdout` |
//! | `n_seeds` | 5 | number of seeds for `compare` |
//! | `out` | `out` | output directory |
//! | `dataset` | empty | input `PNSA` file for `train` and `eval` |
//! | `checkpoint` | empty | input `PNSM` file for `eval` |
//! | `gen.n` | 2825 | images to generate |
//! | `gen.height`, `gen.width` | 32 | image size |
//! | `gen.proportion.good` / `.limited` / `.poor` | 593/2825, 1827/2825, 405/2825 | grade mix, must sum to 1 |
//! | `gen.limited_cropped_fraction` | 0.5 | share of Limited images that are cropped rather than mildly streaked |
//! | `gen.noise_sigma` | 0.05 | pixel noise |
//! | `model.extractor_hidden` | 128 | comma-separated hidden widths of `E` and `E^c` |
//! | `model.feature_dim` | 64 | feature width |
//! | `model.predictor_hidden` | 256,64 | hidden widths of `F` |
//! | `train.mode` | `miqa-pns` | `baseline` or `miqa-pns` |
//! | `train.lambda` | 1.0 | monotonicity weight |
//! | `train.lr` | 0.0001 | Adam learning rate |
//! | `train.batch_size` | 32 | |
//! | `train.max_epochs` | 200 | |
//! | `train.patience` | 15 | early-stopping patience in epochs |
//! | `compare.reference_mode` | `baseline` | first arm of `compare` |
//! | `compare.candidate_mode` | `miqa-pns` | second arm of `compare` |

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::objective::Mode;
use crate::synthetic::{GeneratorConfig, Scenario};
use crate::train::{CompareSpec, TrainConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected 'key = value', got '{text}'")]
    Syntax { line: usize, text: String },
    #[error("unknown config key '{0}'")]
    UnknownKey(String),
    #[error("key '{0}' given twice")]
    DuplicateKey(String),
    #[error("bad value for '{key}': {reason}")]
    Value { key: String, reason: String },
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub scenario: Scenario,
    pub n_seeds: usize,
    pub out: PathBuf,
    pub dataset: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    /// The generator seed is always `seed`; the field here is ignored.
    pub generator: GeneratorConfig,
    /// The training seed is always `seed`; the field here is ignored.
    pub train: TrainConfig,
    pub reference_mode: Mode,
    pub candidate_mode: Mode,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            scenario: Scenario::Iid,
            n_seeds: 5,
            out: PathBuf::from("out"),
            dataset: None,
            checkpoint: None,
            generator: GeneratorConfig::default(),
            train: TrainConfig::default(),
            reference_mode: Mode::Baseline,
            candidate_mode: Mode::MiqaPns,
        }
    }
}

/// Every accepted key, in the order [`RunConfig::to_text`] writes them.
pub const KEYS: [&str; 25] = [
    "seed",
    "scenario",
    "n_seeds",
    "out",
    "dataset",
    "checkpoint",
    "gen.n",
    "gen.height",
    "gen.width",
    "gen.proportion.good",
    "gen.proportion.limited",
    "gen.proportion.poor",
    "gen.limited_cropped_fraction",
    "gen.noise_sigma",
    "model.extractor_hidden",
    "model.feature_dim",
    "model.predictor_hidden",
    "train.mode",
    "train.lambda",
    "train.lr",
    "train.batch_size",
    "train.max_epochs",
    "train.patience",
    "compare.reference_mode",
    "compare.candidate_mode",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::Value {
        key: key.to_string(),
        reason: format!("'{value}': {e}"),
    })
}

fn parse_widths(key: &str, value: &str) -> Result<Vec<usize>, ConfigError> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|w| parse(key, w.trim())).collect()
}

fn parse_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

fn join_widths(widths: &[usize]) -> String {
    widths.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

fn show_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

impl RunConfig {
    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        let g = &mut self.generator;
        let t = &mut self.train;
        match key {
            "seed" => self.seed = parse(key, value)?,
            "scenario" => self.scenario = parse(key, value)?,
            "n_seeds" => self.n_seeds = parse(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "dataset" => self.dataset = parse_path(value),
            "checkpoint" => self.checkpoint = parse_path(value),
            "gen.n" => g.n = parse(key, value)?,
            "gen.height" => g.height = parse(key, value)?,
            "gen.width" => g.width = parse(key, value)?,
            "gen.proportion.good" => g.proportions.good = parse(key, value)?,
            "gen.proportion.limited" => g.proportions.limited = parse(key, value)?,
            "gen.proportion.poor" => g.proportions.poor = parse(key, value)?,
            "gen.limited_cropped_fraction" => g.scene.limited_cropped_fraction = parse(key, value)?,
            "gen.noise_sigma" => g.scene.noise_sigma = parse(key, value)?,
            "model.extractor_hidden" => t.extractor_hidden = parse_widths(key, value)?,
            "model.feature_dim" => t.feature_dim = parse(key, value)?,
            "model.predictor_hidden" => t.predictor_hidden = parse_widths(key, value)?,
            "train.mode" => t.mode = parse(key, value)?,
            "train.lambda" => t.lambda = parse(key, value)?,
            "train.lr" => t.lr = parse(key, value)?,
            "train.batch_size" => t.batch_size = parse(key, value)?,
            "train.max_epochs" => t.max_epochs = parse(key, value)?,
            "train.patience" => t.patience = parse(key, value)?,
            "compare.reference_mode" => self.reference_mode = parse(key, value)?,
            "compare.candidate_mode" => self.candidate_mode = parse(key, value)?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<(), ConfigError> {
        match pair.split_once('=') {
            Some((k, v)) => self.set(k.trim(), v),
            None => Err(ConfigError::Syntax {
                line: 0,
                text: pair.to_string(),
            }),
        }
    }

    /// Applies every line of `text` on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    text: raw.to_string(),
                });
            };
            let k = k.trim();
            if !seen.insert(k.to_string()) {
                return Err(ConfigError::DuplicateKey(k.to_string()));
            }
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_text(&text)
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let g = &self.generator;
        let t = &self.train;
        Some(match key {
            "seed" => self.seed.to_string(),
            "scenario" => self.scenario.to_string(),
            "n_seeds" => self.n_seeds.to_string(),
            "out" => self.out.display().to_string(),
            "dataset" => show_path(&self.dataset),
            "checkpoint" => show_path(&self.checkpoint),
            "gen.n" => g.n.to_string(),
            "gen.height" => g.height.to_string(),
            "gen.width" => g.width.to_string(),
            "gen.proportion.good" => format!("{:?}", g.proportions.good),
            "gen.proportion.limited" => format!("{:?}", g.proportions.limited),
            "gen.proportion.poor" => format!("{:?}", g.proportions.poor),
            "gen.limited_cropped_fraction" => format!("{:?}", g.scene.limited_cropped_fraction),
            "gen.noise_sigma" => format!("{:?}", g.scene.noise_sigma),
            "model.extractor_hidden" => join_widths(&t.extractor_hidden),
            "model.feature_dim" => t.feature_dim.to_string(),
            "model.predictor_hidden" => join_widths(&t.predictor_hidden),
            "train.mode" => t.mode.to_string(),
            "train.lambda" => format!("{:?}", t.lambda),
            "train.lr" => format!("{:?}", t.lr),
            "train.batch_size" => t.batch_size.to_string(),
            "train.max_epochs" => t.max_epochs.to_string(),
            "train.patience" => t.patience.to_string(),
            "compare.reference_mode" => self.reference_mode.to_string(),
            "compare.candidate_mode" => self.candidate_mode.to_string(),
            _ => return None,
        })
    }

    /// All keys, one `key = value` line each, in [`KEYS`] order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for key in KEYS {
            let _ = writeln!(s, "{key} = {}", self.get(key).unwrap_or_default());
        }
        s
    }

    pub fn generator_config(&self) -> GeneratorConfig {
        GeneratorConfig {
            seed: self.seed,
            ..self.generator.clone()
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.train.clone()
        }
    }

    pub fn compare_spec(&self) -> CompareSpec {
        let arm = |mode| TrainConfig {
            mode,
            ..self.train_config()
        };
        CompareSpec {
            generator: self.generator_config(),
            scenario: self.scenario,
            n_seeds: self.n_seeds,
            base_seed: self.seed,
            reference: arm(self.reference_mode),
            candidate: arm(self.candidate_mode),
        }
    }
}
