//! Deterministic, counter-addressed randomness.
//!
//! A [`RandomSource`] is just a seed. Every consumer asks for an independent
//! stream addressed by `(purpose, a, b)`: a xoshiro256++ generator whose
//! state is SplitMix-expanded from a hash of the seed and the address. The
//! values a solver sees therefore do not depend on the order in which
//! streams are opened, which lets per-component estimates run on a thread
//! pool without changing results.

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Result, ZoError};
use crate::vector::DenseVector;

/// What a stream is used for. Part of the stream address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Batch = 1,
    Direction = 2,
    Output = 3,
    Start = 4,
    Split = 5,
    Synthetic = 6,
    Test = 7,
}

/// Generator behind every stream.
pub type StreamRng = Xoshiro256PlusPlus;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomSource {
    seed: u64,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        RandomSource { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent generator for the address `(purpose, a, b)`.
    pub fn stream(&self, purpose: Purpose, a: u64, b: u64) -> StreamRng {
        StreamRng::seed_from_u64(mix(mix(mix(self.seed, purpose as u64), a), b))
    }

    /// Gaussian directions for one estimation call. Calls sharing a tag see
    /// the same directions.
    pub fn directions(&self, tag: DirectionTag) -> Directions {
        Directions { source: *self, tag }
    }
}

/// Address of a family of Gaussian directions: `(phase, step)`, e.g. the
/// inner iteration `t` of an SVRG epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DirectionTag {
    pub phase: u64,
    pub step: u64,
}

impl DirectionTag {
    pub const fn new(phase: u64, step: u64) -> Self {
        DirectionTag { phase, step }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Directions {
    source: RandomSource,
    tag: DirectionTag,
}

impl Directions {
    /// Direction `u ~ N(0, I_d)` for the `k`-th listed index (0-based list
    /// position, not component index). The `d` entries are drawn in
    /// coordinate order from the stream addressed by `(tag, k)`.
    pub fn direction(&self, k: usize, d: usize) -> DenseVector {
        let mut rng = self.source.stream(
            Purpose::Direction,
            mix(self.tag.phase, self.tag.step),
            k as u64,
        );
        standard_normal_vector(&mut rng, d)
    }

    pub fn tag(&self) -> DirectionTag {
        self.tag
    }
}

pub fn standard_normal_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DenseVector {
    (0..d)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Draws `b` indices uniformly from `0..n`.
///
/// With replacement: `b` independent `random_range(0..n)` draws, returned
/// in draw order. Without replacement: a partial Fisher-Yates shuffle making
/// exactly `b` `random_range` draws; the chosen set is returned sorted, since
/// only the set matters.
pub fn sample_minibatch<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    b: usize,
    with_replacement: bool,
) -> Result<Vec<usize>> {
    if b == 0 || n == 0 || (!with_replacement && b > n) {
        return Err(ZoError::InvalidBatch { batch: b, n });
    }
    if with_replacement {
        return Ok((0..b).map(|_| rng.random_range(0..n)).collect());
    }
    let mut pool: Vec<usize> = (0..n).collect();
    for k in 0..b {
        let j = rng.random_range(k..n);
        pool.swap(k, j);
    }
    pool.truncate(b);
    pool.sort_unstable();
    Ok(pool)
}

// splitmix64 finalizer over a combined word
fn mix(a: u64, b: u64) -> u64 {
    let mut z = a.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17)
        ^ b.wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
