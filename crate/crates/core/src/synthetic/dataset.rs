//! Dataset generation and the `PNSA` dataset file.
//!
//! File layout, little-endian:
//!
//! ```text
//! magic "PNSA" | version u32 | count u32 | height u32 | width u32
//! per record: grade u8 (0 good, 1 limited, 2 poor), then height*width f32 pixels
//! ```

use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::scene::{render, Grade, SceneParams, SceneSampler};
use super::SyntheticError;
use crate::derive_seed;

pub const MAGIC: &[u8; 4] = b"PNSA";
pub const FORMAT_VERSION: u32 = 1;
pub const GENERATOR_VERSION: u32 = 1;

/// Class mix. Defaults are the 593 / 1827 / 405 ratios of the reference
/// collection (0.210 / 0.647 / 0.143).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proportions {
    pub good: f64,
    pub limited: f64,
    pub poor: f64,
}

impl Default for Proportions {
    fn default() -> Self {
        Self {
            good: 593.0 / 2825.0,
            limited: 1827.0 / 2825.0,
            poor: 405.0 / 2825.0,
        }
    }
}

impl Proportions {
    pub fn as_array(&self) -> [f64; 3] {
        [self.good, self.limited, self.poor]
    }

    pub fn sum(&self) -> f64 {
        self.good + self.limited + self.poor
    }

    pub fn validate(&self) -> Result<(), SyntheticError> {
        let sum = self.sum();
        if self.as_array().iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(SyntheticError::Proportions { sum });
        }
        Ok(())
    }
}

/// Splits `total` into integer parts proportional to `weights`.
///
/// Floors first, then hands the leftover units to the largest fractional
/// remainders (lower index wins ties). Parts always sum to `total`.
pub fn largest_remainder(total: usize, weights: &[f64]) -> Vec<usize> {
    let weight_sum: f64 = weights.iter().sum();
    if weights.is_empty() {
        return Vec::new();
    }
    if weight_sum <= 0.0 {
        let mut parts = vec![0; weights.len()];
        parts[0] = total;
        return parts;
    }
    let quotas: Vec<f64> = weights.iter().map(|w| total as f64 * w / weight_sum).collect();
    let mut parts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = parts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(total.saturating_sub(assigned)) {
        parts[i] += 1;
    }
    parts
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub n: usize,
    pub proportions: Proportions,
    pub height: usize,
    pub width: usize,
    pub seed: u64,
    pub scene: SceneSampler,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n: 2825,
            proportions: Proportions::default(),
            height: 32,
            width: 32,
            seed: 0,
            scene: SceneSampler::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticImage {
    pub pixels: Vec<f32>,
    pub grade: Grade,
    pub params: SceneParams,
}

/// Generates `config.n` images with exact per-grade counts.
///
/// Image `i` draws from its own RNG stream, so the output is identical
/// whatever order the images are rendered in.
pub fn generate(config: &GeneratorConfig) -> Result<Vec<SyntheticImage>, SyntheticError> {
    config.proportions.validate()?;
    if config.height < super::scene::MIN_SIDE || config.width < super::scene::MIN_SIDE {
        return Err(SyntheticError::Dimensions {
            height: config.height,
            width: config.width,
        });
    }
    let counts = largest_remainder(config.n, &config.proportions.as_array());
    let mut grades: Vec<Grade> = Grade::ALL
        .iter()
        .zip(&counts)
        .flat_map(|(&g, &c)| std::iter::repeat_n(g, c))
        .collect();
    grades.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 0x6f72_6465)));

    let image_seed = derive_seed(config.seed, 0x696d_6167);
    grades
        .par_iter()
        .enumerate()
        .map(|(i, &grade)| {
            let mut rng = ChaCha8Rng::seed_from_u64(image_seed);
            rng.set_stream(i as u64);
            let params = config.scene.sample(grade, &mut rng);
            Ok(SyntheticImage {
                pixels: render(&params, config.height, config.width)?,
                grade,
                params,
            })
        })
        .collect()
}

/// One stored image: grade plus pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub grade: Grade,
    pub pixels: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub height: usize,
    pub width: usize,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn from_images(height: usize, width: usize, images: &[SyntheticImage]) -> Self {
        Self {
            height,
            width,
            samples: images
                .iter()
                .map(|im| Sample {
                    grade: im.grade,
                    pixels: im.pixels.clone(),
                })
                .collect(),
        }
    }

    pub fn generate(config: &GeneratorConfig) -> Result<Self, SyntheticError> {
        Ok(Self::from_images(config.height, config.width, &generate(config)?))
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    pub fn grades(&self) -> Vec<Grade> {
        self.samples.iter().map(|s| s.grade).collect()
    }

    /// Number of images per grade, indexed by [`Grade::code`].
    pub fn grade_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for s in &self.samples {
            counts[s.grade as usize] += 1;
        }
        counts
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(20 + self.len() * (1 + 4 * self.pixel_count()));
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    fn write_to<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        out.write_all(MAGIC)?;
        for v in [FORMAT_VERSION, self.len() as u32, self.height as u32, self.width as u32] {
            out.write_all(&v.to_le_bytes())?;
        }
        for s in &self.samples {
            out.write_all(&[s.grade.code()])?;
            for p in &s.pixels {
                out.write_all(&p.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, SyntheticError> {
        let header = bytes.get(..20).ok_or(SyntheticError::Truncated)?;
        if &header[..4] != MAGIC {
            return Err(SyntheticError::BadMagic);
        }
        let word = |i: usize| u32::from_le_bytes(header[4 + 4 * i..8 + 4 * i].try_into().unwrap());
        let version = word(0);
        if version != FORMAT_VERSION {
            return Err(SyntheticError::UnsupportedVersion(version));
        }
        let (count, height, width) = (word(1) as usize, word(2) as usize, word(3) as usize);
        let record = 1 + 4 * height * width;
        let body = &bytes[20..];
        if body.len() != count * record {
            return Err(if body.len() < count * record {
                SyntheticError::Truncated
            } else {
                SyntheticError::Corrupt(format!("{} trailing bytes", body.len() - count * record))
            });
        }
        let samples = body
            .chunks_exact(record)
            .enumerate()
            .map(|(i, rec)| {
                let grade = Grade::from_code(rec[0])
                    .ok_or_else(|| SyntheticError::Corrupt(format!("record {i}: grade code {}", rec[0])))?;
                let pixels = rec[1..]
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                    .collect();
                Ok(Sample { grade, pixels })
            })
            .collect::<Result<Vec<_>, SyntheticError>>()?;
        Ok(Self {
            height,
            width,
            samples,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SyntheticError> {
        let mut out = BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SyntheticError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

/// `key: value` sidecar text describing how a dataset was produced.
pub fn metadata_text(config: &GeneratorConfig, counts: [usize; 3]) -> String {
    let p = config.proportions;
    let mut s = String::new();
    let mut line = |k: &str, v: String| {
        s.push_str(k);
        s.push_str(": ");
        s.push_str(&v);
        s.push('\n');
    };
    line("format_version", FORMAT_VERSION.to_string());
    line("generator_version", GENERATOR_VERSION.to_string());
    line("seed", config.seed.to_string());
    line("n", config.n.to_string());
    line("height", config.height.to_string());
    line("width", config.width.to_string());
    line("proportion.good", format!("{:?}", p.good));
    line("proportion.limited", format!("{:?}", p.limited));
    line("proportion.poor", format!("{:?}", p.poor));
    line(
        "limited_cropped_fraction",
        format!("{:?}", config.scene.limited_cropped_fraction),
    );
    line("noise_sigma", format!("{:?}", config.scene.noise_sigma));
    line("count.good", counts[0].to_string());
    line("count.limited", counts[1].to_string());
    line("count.poor", counts[2].to_string());
    s
}
