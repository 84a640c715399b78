//! Deterministic random streams.
//!
//! Every consumer of randomness draws from its own ChaCha20 stream whose key
//! is the SHA-256 digest of `(seed, domain, index)`. Streams for different
//! domains or indices are independent, and a stream never depends on how much
//! of any other stream was consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub type SimRng = ChaCha20Rng;

/// Opens the stream named by `domain` and `index` under the run seed.
pub fn stream(seed: u64, domain: &str, index: u64) -> SimRng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update((domain.len() as u64).to_le_bytes());
    hasher.update(domain.as_bytes());
    hasher.update(index.to_le_bytes());
    ChaCha20Rng::from_seed(hasher.finalize().into())
}
