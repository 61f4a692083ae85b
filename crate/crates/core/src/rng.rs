//! Deterministic seed derivation.
//!
//! Sub-seeds for independent tasks (one restart of a clustering run, one
//! simulated respondent) are derived from a base seed plus context words, so
//! parallel work never shares RNG state and results do not depend on
//! execution order.

/// SplitMix64 finalizer; decorrelates consecutive seeds.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a sub-seed from a base seed and context words.
pub fn derive_seed(base: u64, context: &[u64]) -> u64 {
    let mut state = splitmix64(base);
    for &word in context {
        state = splitmix64(state ^ word);
    }
    state
}

/// Derive a sub-seed from a base seed and a context string.
pub fn derive_seed_str(base: u64, context: &str) -> u64 {
    // FNV-1a over the bytes, then mixed with the base.
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in context.as_bytes() {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    derive_seed(base, &[hash])
}
