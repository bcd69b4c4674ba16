//! Deterministic random streams.
//!
//! Every trajectory draws from its own ChaCha stream selected by
//! `(master seed, run index)`, so ensemble results do not depend on how runs
//! are scheduled across worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Master seed of an experiment.
pub type Seed = u64;

pub type StreamRng = ChaCha8Rng;

/// Random stream number `index` under `seed`.
pub fn stream(seed: Seed, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derives an independent master seed from `seed` and a tag (splitmix64 finalizer).
pub fn derive_seed(seed: Seed, tag: u64) -> Seed {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
