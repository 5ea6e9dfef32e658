//! Stable seed derivation.
//!
//! Every stochastic component derives its own stream from a parent seed and a
//! label, so results do not depend on evaluation order or thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8], mut hash: u64) -> u64 {
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `parent` and a textual label.
pub fn derive(parent: u64, label: &str) -> u64 {
    splitmix(fnv1a(label.as_bytes(), FNV_OFFSET ^ splitmix(parent)))
}

/// Derives a child seed from `parent` and a sequence of integers.
pub fn derive_indexed(parent: u64, indices: &[u64]) -> u64 {
    indices
        .iter()
        .fold(splitmix(parent), |acc, &i| splitmix(acc ^ splitmix(i.wrapping_add(0x51))))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
