//! Deterministic seed derivation.
//!
//! Every randomized stage (swarm particles, batch selection, retraining
//! rounds, sweep rows) derives its own stream from a master seed and a salt,
//! so independent stages never share or replay random sequences and results
//! are reproducible regardless of execution order.

/// Mixes a master seed with a salt using the SplitMix64 finalizer. The
/// extra additive constant keeps all-zero inputs off the finalizer's zero
/// fixed point.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed
        ^ salt
            .wrapping_add(1)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
