//! Networks for the feature extractor, its complement and the shared
//! predictor, plus the optimizer and checkpoint format.

mod adam;
pub mod checkpoint;
mod mlp;

pub use adam::{Adam, DEFAULT_LR};
pub use checkpoint::{CheckpointError, LoadMode};
pub use mlp::{BoundMlp, Linear, Mlp, MlpSpec};

use thiserror::Error;

use crate::tensor::TensorError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("network shape has a zero dimension: {0:?}")]
    ZeroDimension(MlpSpec),
    #[error("network has no layers")]
    NoLayers,
    #[error("layer {layer} has inconsistent sizes")]
    LayerSize { layer: usize },
    #[error("input width {got} does not match network input {expected}")]
    InputWidth { expected: usize, got: usize },
    #[error("optimizer expects {expected} parameter buffers, got {got}")]
    ParamCount { expected: usize, got: usize },
    #[error("missing gradient for parameter buffer {0}")]
    MissingGradient(usize),
    #[error("gradient {index} has length {got}, expected {expected}")]
    GradientShape {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("model has no complement extractor")]
    NoComplement,
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Feature extractor `E`, complement extractor `E^c` and shared predictor `F`.
///
/// `complement` is `None` for inference-only models.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelTriple {
    pub extractor: Mlp,
    pub complement: Option<Mlp>,
    pub predictor: Mlp,
}

/// Architecture shared by `E`/`E^c` and `F`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleSpec {
    pub input_dim: usize,
    pub extractor_hidden: Vec<usize>,
    pub feature_dim: usize,
    pub predictor_hidden: Vec<usize>,
}

pub const NUM_CLASSES: usize = 2;

impl TripleSpec {
    pub fn extractor(&self) -> MlpSpec {
        MlpSpec {
            input_dim: self.input_dim,
            hidden_dims: self.extractor_hidden.clone(),
            output_dim: self.feature_dim,
        }
    }

    pub fn predictor(&self) -> MlpSpec {
        MlpSpec {
            input_dim: self.feature_dim,
            hidden_dims: self.predictor_hidden.clone(),
            output_dim: NUM_CLASSES,
        }
    }
}

impl ModelTriple {
    /// Three independently seeded networks; `E^c` never shares storage with `E`.
    pub fn init(spec: &TripleSpec, seed: u64) -> Result<Self, NnError> {
        Ok(Self {
            extractor: Mlp::init(spec.extractor(), crate::derive_seed(seed, 1))?,
            complement: Some(Mlp::init(spec.extractor(), crate::derive_seed(seed, 2))?),
            predictor: Mlp::init(spec.predictor(), crate::derive_seed(seed, 3))?,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.extractor.spec().input_dim
    }

    /// Drops `E^c`, keeping what inference needs.
    pub fn into_inference(self) -> Self {
        Self {
            complement: None,
            ..self
        }
    }

    /// `F(E(x))` logits, `[batch, 2]` row-major.
    pub fn predict(&self, input: &[f64], batch: usize) -> Result<Vec<f64>, NnError> {
        let h = self.extractor.predict(input, batch)?;
        self.predictor.predict(&h, batch)
    }

    /// `F(E^c(x))` logits.
    pub fn predict_complement(&self, input: &[f64], batch: usize) -> Result<Vec<f64>, NnError> {
        let ec = self.complement.as_ref().ok_or(NnError::NoComplement)?;
        let h = ec.predict(input, batch)?;
        self.predictor.predict(&h, batch)
    }

    /// Every parameter buffer, in the order `E`, `E^c`, `F`.
    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.extractor
            .params_mut()
            .chain(self.complement.iter_mut().flat_map(|m| m.params_mut()))
            .chain(self.predictor.params_mut())
    }

    pub fn params(&self) -> impl Iterator<Item = &[f64]> {
        self.extractor
            .params()
            .chain(self.complement.iter().flat_map(|m| m.params()))
            .chain(self.predictor.params())
    }
}
