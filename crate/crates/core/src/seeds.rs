//! Seed derivation.
//!
//! Sub-seeds are `splitmix64` chains over 64-bit words; string components are
//! hashed with FNV-1a (64-bit). Both are fixed so other implementations can
//! reproduce every stream:
//!
//! ```text
//! derive(seed, [w1, w2, ...]) = fold(seed, |acc, w| splitmix64(acc ^ splitmix64(w)))
//! component_seed(master, experiment, component) = derive(master, [fnv1a64("experiment/component")])
//! ```

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(seed: u64, words: &[u64]) -> u64 {
    words
        .iter()
        .fold(splitmix64(seed), |acc, &w| splitmix64(acc ^ splitmix64(w)))
}

pub fn fnv1a64(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

pub fn component_seed(master: u64, experiment: &str, component: &str) -> u64 {
    derive(master, &[fnv1a64(&format!("{experiment}/{component}"))])
}
