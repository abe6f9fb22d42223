//! Seed derivation and counter-based uniforms.
//!
//! Every derived seed in the crate goes through [`mix64`], which is the
//! SplitMix64 finalizer applied twice:
//!
//! ```text
//! splitmix64(z) = let z = z + 0x9E3779B97F4A7C15;
//!                 let z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
//!                 let z = (z ^ (z >> 27)) * 0x94D049BB133111EB;
//!                 z ^ (z >> 31)                       (wrapping u64 arithmetic)
//! mix64(seed, index) = splitmix64(splitmix64(seed) ^ index)
//! ```
//!
//! The function is fixed and platform independent, so sub-stream seeds,
//! augmentation tags and rounding coins reproduce bit-for-bit everywhere.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for all value sampling.
pub type StreamRng = ChaCha8Rng;

/// Domain separators, so that tags, coins and sub-streams derived from one
/// seed never collide.
pub(crate) const TAG_DOMAIN: u64 = 0x7461_6773_0000_0001;
pub(crate) const COIN_DOMAIN: u64 = 0x636f_696e_0000_0002;

#[inline]
pub fn splitmix64(z: u64) -> u64 {
    let z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    let z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and an index (copy number, trial, ...).
#[inline]
pub fn mix64(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ index)
}

/// Maps 64 random bits to a uniform double in [0, 1).
#[inline]
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn stream_rng(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}
