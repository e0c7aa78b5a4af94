//! Reproducible random streams.
//!
//! Every random quantity is drawn from a ChaCha stream keyed by
//! `(seed, purpose)` and selected by a 64-bit index, so independent draws
//! (labels vs. edges, trial 17 vs. trial 18) never share state and results do
//! not depend on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for; distinct purposes never share a key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Labels = 1,
    Edges = 2,
    Trial = 3,
    Partitions = 4,
    Subsets = 5,
    Injections = 6,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives a child seed; used to give each trial its own model seed.
pub fn derive_seed(seed: u64, purpose: Purpose, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(purpose as u64)) ^ index)
}

pub fn stream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    for (chunk, salt) in key.chunks_exact_mut(8).zip(0u64..) {
        let word = splitmix64(seed.wrapping_add(salt.wrapping_mul(0xA24B_AED4_963E_E407)) ^ splitmix64(purpose as u64));
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
