use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::NnError;
use crate::tensor::{self, Layout, Tape, TensorId};

/// Layer widths of a fully connected ReLU network. The output layer is linear.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub output_dim: usize,
}

impl MlpSpec {
    pub fn new(input_dim: usize, hidden_dims: Vec<usize>, output_dim: usize) -> Result<Self, NnError> {
        let spec = Self {
            input_dim,
            hidden_dims,
            output_dim,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if self.dims().any(|d| d == 0) {
            return Err(NnError::ZeroDimension(self.clone()));
        }
        Ok(())
    }

    /// Input, hidden and output widths in order.
    pub fn dims(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.input_dim)
            .chain(self.hidden_dims.iter().copied())
            .chain(std::iter::once(self.output_dim))
    }

    pub fn layer_count(&self) -> usize {
        self.hidden_dims.len() + 1
    }

    pub fn parameter_count(&self) -> usize {
        let dims: Vec<usize> = self.dims().collect();
        dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

/// Dense layer computing `x · W + b`; `weight` is `[in, out]` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    spec: MlpSpec,
    layers: Vec<Linear>,
}

impl Mlp {
    /// Kaiming-uniform weights (bound `sqrt(6 / fan_in)`), zero biases.
    pub fn init(spec: MlpSpec, seed: u64) -> Result<Self, NnError> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims: Vec<usize> = spec.dims().collect();
        let layers = dims
            .windows(2)
            .map(|w| {
                let (in_dim, out_dim) = (w[0], w[1]);
                let bound = (6.0 / in_dim as f64).sqrt();
                let dist = Uniform::new_inclusive(-bound, bound).expect("finite positive bound");
                Linear {
                    in_dim,
                    out_dim,
                    weight: (0..in_dim * out_dim).map(|_| dist.sample(&mut rng)).collect(),
                    bias: vec![0.0; out_dim],
                }
            })
            .collect();
        Ok(Self { spec, layers })
    }

    /// Builds a network from explicit layers; widths must chain.
    pub fn from_layers(layers: Vec<Linear>) -> Result<Self, NnError> {
        let (first, last) = match (layers.first(), layers.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(NnError::NoLayers),
        };
        for (i, l) in layers.iter().enumerate() {
            if l.weight.len() != l.in_dim * l.out_dim || l.bias.len() != l.out_dim {
                return Err(NnError::LayerSize { layer: i });
            }
        }
        for (i, w) in layers.windows(2).enumerate() {
            if w[0].out_dim != w[1].in_dim {
                return Err(NnError::LayerSize { layer: i + 1 });
            }
        }
        let spec = MlpSpec::new(
            first.in_dim,
            layers[..layers.len() - 1].iter().map(|l| l.out_dim).collect(),
            last.out_dim,
        )?;
        Ok(Self { spec, layers })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Linear] {
        &self.layers
    }

    /// Parameter buffers in layer order: weight, then bias.
    pub fn params(&self) -> impl Iterator<Item = &[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.as_slice(), l.bias.as_slice()])
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weight.as_mut_slice(), l.bias.as_mut_slice()])
    }

    /// Records this network's parameters on `tape` as trainable leaves.
    pub fn bind(&self, tape: &mut Tape) -> Result<BoundMlp, NnError> {
        let mut params = Vec::with_capacity(self.layers.len() * 2);
        for l in &self.layers {
            params.push(tape.leaf(vec![l.in_dim, l.out_dim], l.weight.clone())?);
            params.push(tape.leaf(vec![l.out_dim], l.bias.clone())?);
        }
        Ok(BoundMlp {
            input_dim: self.spec.input_dim,
            params,
        })
    }

    /// Tape-free forward pass over a `[batch, input_dim]` row-major buffer.
    ///
    /// Uses the same kernels as the tape, so the logits are bit-identical to
    /// [`BoundMlp::forward`].
    pub fn predict(&self, input: &[f64], batch: usize) -> Result<Vec<f64>, NnError> {
        if batch == 0 || input.len() != batch * self.spec.input_dim {
            return Err(NnError::InputWidth {
                expected: self.spec.input_dim,
                got: input.len().checked_div(batch).unwrap_or(0),
            });
        }
        let mut current = input.to_vec();
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let mut out = vec![0.0; batch * l.out_dim];
            tensor::gemm(
                batch,
                l.in_dim,
                l.out_dim,
                &current,
                Layout::Normal,
                &l.weight,
                Layout::Normal,
                &mut out,
                false,
            );
            tensor::add_bias(&mut out, &l.bias, l.out_dim);
            if i != last {
                out.iter_mut().for_each(|x| *x = tensor::relu(*x));
            }
            current = out;
        }
        Ok(current)
    }
}

/// Tape handles for one network's parameters during a single step.
#[derive(Debug, Clone)]
pub struct BoundMlp {
    input_dim: usize,
    params: Vec<TensorId>,
}

impl BoundMlp {
    pub fn forward(&self, tape: &mut Tape, input: TensorId) -> Result<TensorId, NnError> {
        let shape = tape.shape(input);
        if shape.len() != 2 || shape[1] != self.input_dim {
            return Err(NnError::InputWidth {
                expected: self.input_dim,
                got: *shape.last().unwrap_or(&0),
            });
        }
        let mut h = input;
        let layers = self.params.len() / 2;
        for (i, pair) in self.params.chunks_exact(2).enumerate() {
            let z = tape.matmul(h, pair[0])?;
            h = tape.add(z, pair[1])?;
            if i + 1 != layers {
                h = tape.relu(h)?;
            }
        }
        Ok(h)
    }

    pub fn params(&self) -> &[TensorId] {
        &self.params
    }

    /// Gradients in the order of [`Mlp::params`]; `None` before backward.
    pub fn gradients<'t>(&self, tape: &'t Tape) -> Vec<Option<&'t [f64]>> {
        self.params.iter().map(|&p| tape.grad(p)).collect()
    }
}
