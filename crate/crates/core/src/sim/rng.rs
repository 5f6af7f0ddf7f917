//! Per-replicate random streams.
//!
//! Replicate `i` of a run seeded with `master` draws from a ChaCha8 generator
//! seeded with `mix64(master ^ mix64(i + GOLDEN))`, where `mix64` is the
//! SplitMix64 finaliser. Streams depend only on `(master, i)`, never on the
//! order in which replicates are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_seed(master_seed: u64, replicate: u64) -> u64 {
    mix64(master_seed ^ mix64(replicate.wrapping_add(GOLDEN)))
}

pub fn replicate_rng(master_seed: u64, replicate: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(stream_seed(master_seed, replicate))
}
