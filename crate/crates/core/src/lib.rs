//! Training image-quality classifiers whose hidden features are pushed toward
//! high probability of necessity and sufficiency (PNS) for the Good class.
//!
//! The model is a feature extractor `E`, a structurally identical but
//! separately parameterised complement extractor `E^c`, and a predictor `F`
//! shared by both. Training minimises
//! `L_pred + L_compl + L_mono` (see [`objective`]); at inference only `E` and
//! `F` are kept.
//!
//! Modules, bottom-up:
//!
//! * [`tensor`]: reverse-mode autodiff tape over dense `f64` tensors.
//! * [`nn`]: MLPs, Adam, and the `PNSM` checkpoint format.
//! * [`objective`]: the three losses plus PNS / monotonicity statistics.
//! * [`synthetic`]: the image generator, `PNSA` dataset files and splits.
//! * [`train`]: training loop, early stopping, metrics and multi-seed comparison.
//! * [`config`] and [`cli`]: the `miqa-pns` command line.

pub mod cli;
pub mod config;
pub mod nn;
pub mod objective;
pub mod synthetic;
pub mod tensor;
pub mod train;

/// Mixes a base seed with a stream tag into an independent 64-bit seed (SplitMix64).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
