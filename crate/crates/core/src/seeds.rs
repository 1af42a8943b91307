//! Deterministic derivation of independent random streams from one seed.

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for sub-stream `stream` of `seed`.
pub fn derive(seed: u64, stream: u64) -> u64 {
    mix(mix(seed) ^ mix(stream.wrapping_add(0xA076_1D64_78BD_642F)))
}

/// Named sub-streams used across training.
pub mod stream {
    pub const INIT: u64 = 1;
    pub const EPOCH: u64 = 2;
    pub const RAYS: u64 = 3;
    pub const TRIAL: u64 = 4;
    pub const MODEL: u64 = 5;
}
