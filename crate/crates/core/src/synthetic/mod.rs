//! Synthetic anterior-chamber images with a known labelling rule.
//!
//! A clear, uncropped, artifact-free chamber is what makes an image Good.
//! Strong streak artifacts make it Poor. Limited images are either cropped
//! without artifacts or carry mild artifacts, so "has artifacts" is sufficient
//! but not necessary for Deficient.

pub mod dataset;
pub mod scene;
pub mod split;

pub use dataset::{generate, largest_remainder, metadata_text, Dataset, GeneratorConfig, Proportions, Sample, SyntheticImage};
pub use scene::{render, Grade, SceneParams, SceneSampler};
pub use split::{make_split, Scenario, Split};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SyntheticError {
    #[error("image must be at least 16x16, got {height}x{width}")]
    Dimensions { height: usize, width: usize },
    #[error("scene parameters out of range: {0:?}")]
    InvalidParams(SceneParams),
    #[error("grade proportions must be non-negative and sum to 1, got sum {sum}")]
    Proportions { sum: f64 },
    #[error("scenario {scenario} needs {grade} images but the dataset has none")]
    MissingGrade { grade: Grade, scenario: Scenario },
    #[error("dataset i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a dataset file (bad magic)")]
    BadMagic,
    #[error("unsupported dataset version {0}")]
    UnsupportedVersion(u32),
    #[error("dataset file truncated")]
    Truncated,
    #[error("corrupt dataset: {0}")]
    Corrupt(String),
}
