//! Seed derivation.
//!
//! Every random draw in a campaign is keyed by a seed derived from the master
//! seed and a path of integers (location, transmitter, purpose):
//! `mix(s, [a, b, ..]) = splitmix64(.. splitmix64(splitmix64(s) ^ a) ^ b ..)`.
//! Results therefore do not depend on evaluation order or thread count.

/// One round of the SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn mix(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ p))
}

/// Purpose tags used as the last element of a seed path.
pub mod purpose {
    pub const CHANNEL: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const CLOCK: u64 = 3;
    pub const JITTER: u64 = 4;
}
