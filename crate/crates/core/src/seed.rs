//! Stable per-unit and per-item random streams.
//!
//! Every random decision in the pipeline draws from a generator derived from
//! the global seed and the identity of the thing being processed, so the
//! output never depends on worker scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type UnitRng = ChaCha8Rng;

pub fn unit_rng(seed: u64, source_id: &str, unit_index: usize) -> UnitRng {
    let mut hasher = Sha256::new();
    hasher.update(b"unit\0");
    hasher.update(seed.to_le_bytes());
    hasher.update((source_id.len() as u64).to_le_bytes());
    hasher.update(source_id.as_bytes());
    hasher.update((unit_index as u64).to_le_bytes());
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

pub fn item_rng(seed: u64, item_id: u64) -> UnitRng {
    let mut hasher = Sha256::new();
    hasher.update(b"item\0");
    hasher.update(seed.to_le_bytes());
    hasher.update(item_id.to_le_bytes());
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

pub fn stream_rng(seed: u64, label: &str) -> UnitRng {
    let mut hasher = Sha256::new();
    hasher.update(b"stream\0");
    hasher.update(seed.to_le_bytes());
    hasher.update(label.as_bytes());
    ChaCha8Rng::from_seed(hasher.finalize().into())
}
