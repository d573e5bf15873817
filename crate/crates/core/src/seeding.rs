//! Independent, reproducible random streams.
//!
//! Every stochastic stage draws from its own ChaCha stream keyed by
//! `(master seed, stage name, index)`, so adding a stage or drawing more
//! numbers in one stage never shifts another stage's randomness.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub fn stream_seed(master: u64, stage: &str, index: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update((stage.len() as u64).to_le_bytes());
    h.update(stage.as_bytes());
    h.update(index.to_le_bytes());
    h.finalize().into()
}

pub fn stream(master: u64, stage: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(stream_seed(master, stage, index))
}

/// 64-bit child seed, e.g. one per experiment.
pub fn derive_seed(master: u64, stage: &str, index: u64) -> u64 {
    let s = stream_seed(master, stage, index);
    u64::from_le_bytes(s[..8].try_into().unwrap())
}
