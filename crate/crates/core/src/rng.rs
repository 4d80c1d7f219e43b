//! Keyed random substreams.
//!
//! Every random decision is drawn from a ChaCha stream whose key is derived
//! from `(seed, domain, key)`, so results never depend on scheduling order or
//! worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type KeyedRng = ChaCha8Rng;

pub fn keyed(seed: u64, domain: &str, key: &[u8]) -> KeyedRng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update((domain.len() as u64).to_le_bytes());
    hasher.update(domain.as_bytes());
    hasher.update(key);
    ChaCha8Rng::from_seed(hasher.finalize().into())
}
