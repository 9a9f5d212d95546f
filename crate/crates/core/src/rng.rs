//! Deterministic per-task random streams derived from a master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Generator used for every stochastic computation.
pub type StreamRng = ChaCha8Rng;

/// Seeds a stream from `sha256(master_seed || key)`. Distinct keys give
/// independent streams, so results do not depend on task scheduling.
pub fn stream(master_seed: u64, key: &str) -> StreamRng {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update(key.as_bytes());
    StreamRng::from_seed(h.finalize().into())
}

/// Derives a 64-bit child seed, for handing to APIs that take a plain seed.
pub fn child_seed(master_seed: u64, key: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update(b"child:");
    h.update(key.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}
