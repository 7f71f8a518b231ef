//! Reproducible random streams.
//!
//! Every stream is a ChaCha20 generator keyed by `SHA-256(seed ‖ path)`,
//! where `path` names the consumer (`"chain/3"`, `"null/0"`, …). Streams
//! with different paths are independent for all practical purposes, and a
//! given `(seed, path)` always yields the same sequence regardless of how
//! many other streams exist or in which order they are created.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha20Rng;

pub fn stream(seed: u64, path: &str) -> StreamRng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(path.as_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha20Rng::from_seed(key)
}

/// Stream for item `index` under `prefix`, i.e. `"{prefix}/{index}"`.
pub fn indexed(seed: u64, prefix: &str, index: usize) -> StreamRng {
    stream(seed, &format!("{prefix}/{index}"))
}
