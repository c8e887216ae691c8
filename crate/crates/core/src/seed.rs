//! Stream splitting: every random choice in a run derives from the single run
//! seed through a chain of SplitMix64 mixes, one link per level
//! (problem, fold, program, ...).

/// One SplitMix64 output step applied to `x`.
pub fn mix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of sub-stream `stream` from `parent`.
pub fn split(parent: u64, stream: u64) -> u64 {
    mix(mix(parent) ^ stream.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Derives a seed along a path of stream indices.
pub fn derive(parent: u64, path: &[u64]) -> u64 {
    path.iter().fold(parent, |s, &i| split(s, i))
}
