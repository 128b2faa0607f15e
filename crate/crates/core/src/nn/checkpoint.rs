//! Binary checkpoint format (`PNSM`), little-endian:
//!
//! ```text
//! magic    "PNSM"
//! version  u32
//! flags    u32   bit 0 = E, bit 1 = E^c, bit 2 = F
//! per present component, in order E, E^c, F:
//!   n_dims u32, then n_dims x u32 layer widths (input, hidden..., output)
//!   per layer: weight f64 [in x out] row-major, then bias f64 [out]
//! ```

use std::path::Path;

use thiserror::Error;

use super::{Linear, Mlp, ModelTriple, NnError};

pub const MAGIC: &[u8; 4] = b"PNSM";
pub const VERSION: u32 = 1;

const FLAG_EXTRACTOR: u32 = 1;
const FLAG_COMPLEMENT: u32 = 1 << 1;
const FLAG_PREDICTOR: u32 = 1 << 2;
const MAX_DIMS: u32 = 1024;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0} (expected {VERSION})")]
    UnsupportedVersion(u32),
    #[error("checkpoint truncated at byte {0}")]
    Truncated(usize),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("checkpoint lacks the {0} network")]
    MissingComponent(&'static str),
}

/// `Inference` drops `E^c` even when the file carries it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadMode {
    Full,
    Inference,
}

pub fn to_bytes(model: &ModelTriple) -> Vec<u8> {
    let mut flags = FLAG_EXTRACTOR | FLAG_PREDICTOR;
    if model.complement.is_some() {
        flags |= FLAG_COMPLEMENT;
    }
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&flags.to_le_bytes());
    write_mlp(&mut out, &model.extractor);
    if let Some(ec) = &model.complement {
        write_mlp(&mut out, ec);
    }
    write_mlp(&mut out, &model.predictor);
    out
}

fn write_mlp(out: &mut Vec<u8>, mlp: &Mlp) {
    let dims: Vec<usize> = mlp.spec().dims().collect();
    out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for d in dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for p in mlp.params() {
        for x in p {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
}

pub fn from_bytes(bytes: &[u8], mode: LoadMode) -> Result<ModelTriple, CheckpointError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(CheckpointError::UnsupportedVersion(version));
    }
    let flags = r.u32()?;
    if flags & !(FLAG_EXTRACTOR | FLAG_COMPLEMENT | FLAG_PREDICTOR) != 0 {
        return Err(CheckpointError::Corrupt(format!("unknown component flags {flags:#x}")));
    }
    if flags & FLAG_EXTRACTOR == 0 {
        return Err(CheckpointError::MissingComponent("extractor"));
    }
    if flags & FLAG_PREDICTOR == 0 {
        return Err(CheckpointError::MissingComponent("predictor"));
    }
    let extractor = read_mlp(&mut r)?;
    let complement = if flags & FLAG_COMPLEMENT != 0 {
        Some(read_mlp(&mut r)?)
    } else {
        None
    };
    let predictor = read_mlp(&mut r)?;
    if r.pos != bytes.len() {
        return Err(CheckpointError::Corrupt(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    if let Some(ec) = &complement {
        if ec.spec() != extractor.spec() {
            return Err(CheckpointError::Corrupt(
                "complement extractor shape differs from extractor".into(),
            ));
        }
    }
    if predictor.spec().input_dim != extractor.spec().output_dim {
        return Err(CheckpointError::Corrupt(
            "predictor input does not match feature width".into(),
        ));
    }
    Ok(ModelTriple {
        extractor,
        complement: match mode {
            LoadMode::Full => complement,
            LoadMode::Inference => None,
        },
        predictor,
    })
}

fn read_mlp(r: &mut Reader<'_>) -> Result<Mlp, CheckpointError> {
    let n = r.u32()?;
    if !(2..=MAX_DIMS).contains(&n) {
        return Err(CheckpointError::Corrupt(format!("{n} layer widths")));
    }
    let dims = (0..n)
        .map(|_| r.u32().map(|d| d as usize))
        .collect::<Result<Vec<_>, _>>()?;
    if dims.contains(&0) {
        return Err(CheckpointError::Corrupt("zero layer width".into()));
    }
    let floats: usize = dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
    if floats.saturating_mul(8) > r.remaining() {
        return Err(CheckpointError::Truncated(r.bytes.len()));
    }
    let layers = dims
        .windows(2)
        .map(|w| {
            Ok(Linear {
                in_dim: w[0],
                out_dim: w[1],
                weight: r.f64s(w[0] * w[1])?,
                bias: r.f64s(w[1])?,
            })
        })
        .collect::<Result<Vec<_>, CheckpointError>>()?;
    Mlp::from_layers(layers).map_err(|e: NnError| CheckpointError::Corrupt(e.to_string()))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.remaining() < n {
            return Err(CheckpointError::Truncated(self.bytes.len()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, CheckpointError> {
        Ok(self
            .take(n * 8)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn save(model: &ModelTriple, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
    std::fs::write(path, to_bytes(model))?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>, mode: LoadMode) -> Result<ModelTriple, CheckpointError> {
    from_bytes(&std::fs::read(path)?, mode)
}
