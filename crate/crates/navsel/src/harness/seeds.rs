//! Counter-based seed derivation.
//!
//! Every randomized stage derives its seed as
//! `split_seed(master, STREAM_*, index)`, so results are reproducible no
//! matter how work is scheduled across threads.

/// Scenario generation stream.
pub const STREAM_ENVGEN: u64 = 1;
/// Reserved for per-trial randomness (trials are currently deterministic).
pub const STREAM_TRIAL: u64 = 2;
/// Deployment stream (scenario subsampling and the random first policy).
pub const STREAM_DEPLOY: u64 = 3;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent child seed from (master, stream, index).
pub fn split_seed(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ stream.wrapping_mul(0xA076_1D64_78BD_642F)) ^ index)
}
