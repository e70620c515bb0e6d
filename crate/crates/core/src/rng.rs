//! Seeded, platform-independent random streams.
//!
//! Byte protocol: a run seed `s` and a stream index `i` select the ChaCha20
//! generator `ChaCha20Rng::seed_from_u64(s)` with `set_stream(i)`. A residue
//! below `p` is drawn from successive `next_u32` outputs, rejecting values
//! `>= floor(2^32 / p) * p` and reducing the first accepted value mod `p`.
//! Census sample `i` always uses stream `i`, so results do not depend on how
//! work is split between workers.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

pub type Stream = ChaCha20Rng;

/// The generator for `(seed, stream)`.
pub fn stream(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Unbiased value in `0..bound` by rejection sampling on `u32`.
pub fn below<R: RngCore>(rng: &mut R, bound: u32) -> u32 {
    assert!(bound > 0);
    let zone = (u64::from(u32::MAX) + 1) / u64::from(bound) * u64::from(bound);
    loop {
        let x = rng.next_u32();
        if u64::from(x) < zone {
            return x % bound;
        }
    }
}

/// Unbiased `u64` in `0..bound`.
pub fn below_u64<R: RngCore>(rng: &mut R, bound: u64) -> u64 {
    assert!(bound > 0);
    let zone = u64::MAX - (u64::MAX % bound);
    loop {
        let x = rng.next_u64();
        if x < zone {
            return x % bound;
        }
    }
}
