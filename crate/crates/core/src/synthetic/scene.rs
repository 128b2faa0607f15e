use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::SyntheticError;
use crate::objective::QualityLabel;

/// Three-way acquisition grade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Grade {
    Good = 0,
    Limited = 1,
    Poor = 2,
}

impl Grade {
    pub const ALL: [Grade; 3] = [Grade::Good, Grade::Limited, Grade::Poor];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    /// Limited and Poor both map to Deficient.
    pub fn label(self) -> QualityLabel {
        match self {
            Grade::Good => QualityLabel::Good,
            Grade::Limited | Grade::Poor => QualityLabel::Deficient,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Grade::Good => "good",
            Grade::Limited => "limited",
            Grade::Poor => "poor",
        }
    }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Grade {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "good" => Ok(Grade::Good),
            "limited" => Ok(Grade::Limited),
            "poor" => Ok(Grade::Poor),
            other => Err(format!("unknown grade '{other}'")),
        }
    }
}

/// Generating parameters of one image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneParams {
    /// Chamber contrast, in `[0, 1]`.
    pub chamber_clarity: f64,
    /// Fraction of the chamber pushed past the right image edge, in `[0, 1]`.
    pub crop_fraction: f64,
    /// Count and opacity of occluding streaks, in `[0, 1]`.
    pub artifact_strength: f64,
    pub noise_sigma: f64,
    /// Seeds streak placement, jitter and pixel noise.
    pub rng_seed: u64,
}

pub const GOOD_MIN_CLARITY: f64 = 0.8;
pub const GOOD_MAX_CROP: f64 = 0.1;
pub const POOR_MIN_ARTIFACT: f64 = 0.7;

impl SceneParams {
    pub fn validate(&self) -> Result<(), SyntheticError> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.chamber_clarity)
            || !unit(self.crop_fraction)
            || !unit(self.artifact_strength)
            || !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite())
        {
            return Err(SyntheticError::InvalidParams(*self));
        }
        Ok(())
    }

    /// The grade these parameters imply under the labelling rule.
    ///
    /// Strong artifacts make an image Poor; a clear, uncropped, artifact-free
    /// chamber makes it Good; everything else is Limited.
    pub fn implied_grade(&self) -> Grade {
        if self.artifact_strength >= POOR_MIN_ARTIFACT {
            Grade::Poor
        } else if self.artifact_strength == 0.0
            && self.chamber_clarity >= GOOD_MIN_CLARITY
            && self.crop_fraction <= GOOD_MAX_CROP
        {
            Grade::Good
        } else {
            Grade::Limited
        }
    }
}

/// Draws [`SceneParams`] for a requested grade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneSampler {
    /// Probability that a Limited image is cropped without artifacts (the
    /// alternative is a mild artifact on an uncropped chamber).
    pub limited_cropped_fraction: f64,
    pub noise_sigma: f64,
}

impl Default for SceneSampler {
    fn default() -> Self {
        Self {
            limited_cropped_fraction: 0.5,
            noise_sigma: 0.05,
        }
    }
}

impl SceneSampler {
    pub fn sample<R: Rng + ?Sized>(&self, grade: Grade, rng: &mut R) -> SceneParams {
        let (clarity, crop, artifact) = match grade {
            Grade::Good => (rng.random_range(0.8..=1.0), rng.random_range(0.0..=0.1), 0.0),
            Grade::Poor => (
                rng.random_range(0.0..=1.0),
                rng.random_range(0.0..=0.8),
                rng.random_range(0.7..=1.0),
            ),
            Grade::Limited => {
                let clarity = rng.random_range(0.6..=1.0);
                if rng.random_bool(self.limited_cropped_fraction) {
                    (clarity, rng.random_range(0.3..=0.8), rng.random_range(0.0..=0.05))
                } else {
                    (clarity, rng.random_range(0.0..=0.1), rng.random_range(0.3..=0.6))
                }
            }
        };
        SceneParams {
            chamber_clarity: clarity,
            crop_fraction: crop,
            artifact_strength: artifact,
            noise_sigma: self.noise_sigma,
            rng_seed: rng.next_u64(),
        }
    }
}

pub const MIN_SIDE: usize = 16;
const BACKGROUND: f64 = 0.08;
const CHAMBER_GAIN: f64 = 0.75;
const MAX_STREAKS: f64 = 8.0;
const STREAK_OPACITY: f64 = 0.9;

/// Renders a grayscale frame, row-major, values in `[0, 1]`.
///
/// The chamber is the upper half of an annulus spanning the full frame width,
/// shifted right by `crop_fraction` of its width so exactly that fraction of
/// its horizontal extent leaves the frame.
pub fn render(params: &SceneParams, height: usize, width: usize) -> Result<Vec<f32>, SyntheticError> {
    if height < MIN_SIDE || width < MIN_SIDE {
        return Err(SyntheticError::Dimensions { height, width });
    }
    params.validate()?;
    let (h, w) = (height as f64, width as f64);
    let mut geometry_rng = stream_rng(params.rng_seed, 0);
    let mut streak_rng = stream_rng(params.rng_seed, 1);
    let mut noise_rng = stream_rng(params.rng_seed, 2);

    let jitter = h / 16.0;
    let outer = w / 2.0;
    let inner = outer - (w * 0.1).max(2.0);
    let cy = 0.75 * h + geometry_rng.random_range(-jitter..=jitter);
    let cx = w / 2.0 + params.crop_fraction * 2.0 * outer;
    let chamber = BACKGROUND + CHAMBER_GAIN * params.chamber_clarity;

    let mut pixels = vec![BACKGROUND; height * width];
    for y in 0..height {
        for x in 0..width {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let r = ((px - cx).powi(2) + (py - cy).powi(2)).sqrt();
            if py <= cy && r >= inner && r <= outer {
                pixels[y * width + x] = chamber;
            }
        }
    }

    let streaks = (params.artifact_strength * MAX_STREAKS).round() as usize;
    let keep = 1.0 - STREAK_OPACITY * params.artifact_strength;
    let (mut visible_left, mut visible_right) = ((cx - outer).max(0.0), (cx + outer).min(w));
    if visible_right - visible_left < 1.0 {
        // chamber fully cropped away
        (visible_left, visible_right) = (0.0, w);
    }
    let top = (cy - outer - 1.0).max(0.0) as usize;
    let bottom = ((cy + 1.0) as usize).min(height);
    for _ in 0..streaks {
        let x0 = streak_rng.random_range(visible_left..visible_right) as usize;
        let thickness = streak_rng.random_range(1..=(width / 16).max(1));
        for x in x0..(x0 + thickness).min(width) {
            for y in top..bottom {
                pixels[y * width + x] *= keep;
            }
        }
    }

    if params.noise_sigma > 0.0 {
        let noise = Normal::new(0.0, params.noise_sigma).expect("validated sigma");
        for p in pixels.iter_mut() {
            *p += noise.sample(&mut noise_rng);
        }
    }
    Ok(pixels.into_iter().map(|p| p.clamp(0.0, 1.0) as f32).collect())
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
