//! Deterministic per-trial random streams.
//!
//! Each trial owns a generator seeded from `(master seed, tag, index)`, so
//! a run produces the same draws whatever the worker count or schedule.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for every Monte-Carlo draw.
pub type TrialRng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of the stream for one trial.
pub fn stream_seed(master: u64, tag: u64, index: u64) -> u64 {
    mix64(mix64(mix64(master) ^ tag) ^ index)
}

pub fn trial_rng(master: u64, tag: u64, index: u64) -> TrialRng {
    TrialRng::seed_from_u64(stream_seed(master, tag, index))
}

/// Stream tags keeping H0 and each H1 configuration on disjoint streams.
pub mod tags {
    pub const H0: u64 = 0x4830;
    pub const H1: u64 = 0x4831;

    /// H1 stream for the `k`-th entry of a parameter sweep.
    pub fn h1_sweep(k: usize) -> u64 {
        super::mix64(H1 ^ ((k as u64 + 1) << 32))
    }
}
