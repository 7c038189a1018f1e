//! Splittable seed derivation.
//!
//! Every random stream in the toolkit is keyed by a 64-bit seed. Child seeds
//! are derived from a parent and an ordered list of integer indices by
//! repeated SplitMix64 finalisation:
//!
//! ```text
//! s0 = mix(parent ^ 0x6f616d5f666f7267)
//! s_{i+1} = mix(s_i ^ mix(index_i + 0x9e3779b97f4a7c15 * (i + 1)))
//! ```
//!
//! The derivation is a pure function of its inputs, so parallel and serial
//! generation consume identical streams.

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `parent` and a path of indices.
pub fn derive_seed(parent: u64, path: &[u64]) -> u64 {
    let mut s = mix64(parent ^ 0x6f61_6d5f_666f_7267);
    for (i, &idx) in path.iter().enumerate() {
        let salt = 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(i as u64 + 1);
        s = mix64(s ^ mix64(idx.wrapping_add(salt)));
    }
    s
}
