//! Named, independent random streams derived from one run seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

/// Stable child seed: the first 8 bytes of `SHA-256(parent_le || name)`.
pub fn derive_seed(parent: u64, name: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(parent.to_le_bytes());
    h.update(name.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

pub fn stream(parent: u64, name: &str) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(parent, name))
}

/// Stream names used by the trainer.
pub mod names {
    pub const INIT: &str = "init";
    pub const ENCODING: &str = "encoding";
    pub const NOISE: &str = "noise";
    pub const DROPOUT: &str = "dropout";
    pub const SPLIT: &str = "split";
    pub const SHUFFLE: &str = "shuffle";
    pub const EVAL: &str = "eval";
}
