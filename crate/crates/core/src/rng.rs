//! Seed derivation for reproducible, order-independent random streams.
//!
//! Every stochastic consumer (per-slot blockage, per-user swarm, layout) gets
//! its own ChaCha stream keyed by a hash of `(seed, tags...)`, so results do
//! not depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a base seed with a list of tags into a new 64-bit seed.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(seed), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

pub fn stream(seed: u64, tags: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(seed, tags))
}

// Stream domain tags.
pub(crate) const TAG_LAYOUT: u64 = 0x4c41_594f_5554;
pub(crate) const TAG_CHANNEL: u64 = 0x4348_414e;
pub(crate) const TAG_SWARM: u64 = 0x5357_524d;
