//! Counter-keyed random streams.
//!
//! A stream is addressed by `(seed, purpose, index)`, so the draws of replicate
//! `b` or simulation `s` never depend on which thread produced them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream purposes.
pub const BOOTSTRAP: u64 = 0x6f6f_7473;
pub const DATA: u64 = 0x6461_7461;
pub const SIM_SEED: u64 = 0x7369_6d73;

#[inline]
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Hash of several words, used where a single uniform draw must be a pure
/// function of its coordinates.
#[inline]
pub fn hash_words(words: &[u64]) -> u64 {
    words.iter().fold(0x243f_6a88_85a3_08d3, |h, &w| splitmix64(h ^ w))
}

/// Independent generator for `(seed, purpose, index)`.
pub fn stream(seed: u64, purpose: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut h = hash_words(&[seed, purpose]);
    for chunk in key.chunks_mut(8) {
        h = splitmix64(h);
        chunk.copy_from_slice(&h.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// A derived 64-bit seed, e.g. the bootstrap seed of simulation `index`.
pub fn derive_seed(seed: u64, purpose: u64, index: u64) -> u64 {
    hash_words(&[seed, purpose, index])
}
