//! Named random sub-streams derived from a single master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Random source used everywhere in the crate.
pub type Rng = ChaCha8Rng;

/// Derives a child seed from `parent` and a stream label.
///
/// Children with different labels are independent, so adding a new stream
/// (or a new curve) never perturbs the existing ones.
pub fn derive_seed(parent: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(parent.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Random source for the sub-stream `label` of `parent`.
pub fn stream(parent: u64, label: &str) -> Rng {
    Rng::seed_from_u64(derive_seed(parent, label))
}
