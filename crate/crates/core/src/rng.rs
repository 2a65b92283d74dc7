//! The one random generator used everywhere: xoshiro256++ seeded through
//! splitmix64 (`Xoshiro256PlusPlus::seed_from_u64`).
//!
//! Shuffles and uniform draws are built directly on `next_u64` so results do
//! not depend on the platform word size. Independent streams for separate
//! purposes are derived with [`substream`]: the child seed is
//! `seed + (stream_id + 1) * 0x9E3779B97F4A7C15` (wrapping), which is then
//! expanded by splitmix64 as usual.
//!
//! Stream assignment for a training seed `s`: weight initialisation draws
//! from `seeded(s)`; the validation split and per-epoch batch order from
//! `substream(s, TRAIN_SPLIT)`; the evaluation holdout split from
//! `substream(s, HOLDOUT)`. Synthetic scenes use one substream per grid
//! family, listed in `synth`.

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub type Generator = Xoshiro256PlusPlus;

pub const TRAIN_SPLIT: u64 = 1;
pub const HOLDOUT: u64 = 2;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn seeded(seed: u64) -> Generator {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

pub fn substream(seed: u64, stream_id: u64) -> Generator {
    let child = seed.wrapping_add(stream_id.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    Xoshiro256PlusPlus::seed_from_u64(child)
}

/// Uniform in [0, 1) with 53 random bits.
pub fn uniform(rng: &mut Generator) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform integer in [0, n) by 128-bit multiply-shift.
pub fn below(rng: &mut Generator, n: u64) -> u64 {
    debug_assert!(n > 0);
    ((rng.next_u64() as u128 * n as u128) >> 64) as u64
}

/// Fisher-Yates, walking from the back.
pub fn shuffle<T>(rng: &mut Generator, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = below(rng, i as u64 + 1) as usize;
        items.swap(i, j);
    }
}
