//! Named random substreams derived from a single root seed.
//!
//! Every stochastic stage draws from its own stream so that, for example,
//! adding an attacker never perturbs mobility.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derive a child seed from `parent` and a label.
pub fn derive(parent: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(parent.to_le_bytes());
    h.update((label.len() as u64).to_le_bytes());
    h.update(label.as_bytes());
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("sha256 output is 32 bytes"))
}

/// Derive a child seed from `parent`, a label and an index.
pub fn derive_indexed(parent: u64, label: &str, index: u64) -> u64 {
    derive(derive(parent, label), &index.to_string())
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
