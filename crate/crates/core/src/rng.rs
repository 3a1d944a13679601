//! Deterministic random substreams.
//!
//! Every sampler takes an explicit generator. Parallel work derives one
//! generator per unit of work from `(master seed, labels...)`, so results do
//! not depend on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type SimRng = ChaCha8Rng;

/// Generator seeded directly from a master seed.
pub fn master(seed: u64) -> SimRng {
    substream(seed, &[])
}

/// Generator for the substream identified by `labels` under `seed`.
pub fn substream(seed: u64, labels: &[u64]) -> SimRng {
    let mut hasher = Sha256::new();
    hasher.update(b"ppapprox-substream");
    hasher.update(seed.to_le_bytes());
    for label in labels {
        hasher.update(label.to_le_bytes());
    }
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

/// Stable label for a string tag, for use inside `substream` label paths.
pub fn tag(name: &str) -> u64 {
    let digest = Sha256::digest(name.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}
