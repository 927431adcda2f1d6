//! Stable, platform-independent hashing and seed derivation.
//!
//! Every random stream in the toolkit is derived positionally from one global
//! seed plus a key (an example id, a grid cell, an epoch). Nothing here may
//! depend on iteration order, pointer values or `std`'s randomized hasher.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over a sequence of byte strings, each followed by a 0xff separator
/// so that `("ab", "c")` and `("a", "bc")` hash differently.
pub fn stable_hash<I, T>(parts: I) -> u64
where
    I: IntoIterator<Item = T>,
    T: AsRef<[u8]>,
{
    let mut h = FNV_OFFSET;
    for part in parts {
        for &b in part.as_ref() {
            h ^= u64::from(b);
            h = h.wrapping_mul(FNV_PRIME);
        }
        h ^= 0xff;
        h = h.wrapping_mul(FNV_PRIME);
    }
    mix64(h)
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-style draw keyed by `(seed, key parts)`.
pub fn keyed_draw<I, T>(seed: u64, parts: I) -> u64
where
    I: IntoIterator<Item = T>,
    T: AsRef<[u8]>,
{
    mix64(seed ^ stable_hash(parts))
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
