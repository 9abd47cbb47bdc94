//! Counter-based randomness: every random decision is a pure function of
//! (seed, purpose, timestamp, …), so replaying any prefix of a stream repeats
//! exactly the same coin flips.

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Hashes an arbitrary sequence of words.
pub(crate) fn hash(words: &[u64]) -> u64 {
    words.iter().fold(0x243F_6A88_85A3_08D3, |acc, &w| splitmix(acc ^ splitmix(w)))
}

/// Uniform draw in `[0, 1)` keyed by `words`.
pub(crate) fn unit(words: &[u64]) -> f64 {
    (hash(words) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub(crate) const SALT_MEYERSON: u64 = 0x4d45_5945;
pub(crate) const SALT_RING: u64 = 0x5249_4e47;
