//! Seed derivation.
//!
//! Every random stream is a `ChaCha8Rng` keyed from `(seed, domain, index)`:
//! the domain label is hashed with 64-bit FNV-1a, combined with the seed and
//! the index through SplitMix64, and the resulting four words form the
//! 32-byte ChaCha key. Streams for different domains or days are therefore
//! independent of the order in which they are requested, and identical on
//! every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Sub-seed for `(seed, domain, index)`.
pub fn derive_seed(seed: u64, domain: &str, index: i64) -> u64 {
    let mut state =
        seed ^ fnv1a(domain).rotate_left(17) ^ (index as u64).wrapping_mul(0xd6e8_feb8_6659_fd93);
    splitmix64(&mut state)
}

pub fn stream(seed: u64, domain: &str, index: i64) -> Rng {
    let mut state = derive_seed(seed, domain, index);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
