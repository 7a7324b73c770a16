//! Seed derivation. Every random stream is keyed by `(seed, label)` so that
//! independent parts of an experiment never share generator state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub fn stream_seed(seed: u64, label: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    h.finalize().into()
}

pub fn stream_rng(seed: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(stream_seed(seed, label))
}

/// 64-bit key derived from `(seed, label)`, for hash-based generators.
pub fn stream_key(seed: u64, label: &str) -> u64 {
    let b = stream_seed(seed, label);
    u64::from_le_bytes(b[..8].try_into().unwrap())
}

#[inline]
pub fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform in the open interval (0, 1).
#[inline]
pub fn open_unit(h: u64) -> f64 {
    ((h >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Uniform integer in `0..k`.
#[inline]
pub fn below(h: u64, k: u64) -> u64 {
    ((h as u128 * k as u128) >> 64) as u64
}
