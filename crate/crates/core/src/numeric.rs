//! Small numeric helpers shared by the scanning kernels: compensated
//! summation, seed mixing and a stable content hash.

use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// An exact rational for output records: numerator and denominator as decimal
/// strings plus the nearest double.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactRational {
    pub num: String,
    pub den: String,
    pub value: f64,
}

impl From<&BigRational> for ExactRational {
    fn from(r: &BigRational) -> Self {
        ExactRational {
            num: r.numer().to_string(),
            den: r.denom().to_string(),
            value: r.to_f64().unwrap_or(f64::NAN),
        }
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Fixed chunk length for parallel float reductions. Chunk boundaries never
/// depend on the worker count, so results are bit-identical for any pool size.
pub const REDUCTION_CHUNK: u64 = 1 << 12;

/// Sums `term(i)` for `i` in `0..len` with per-chunk compensated partial sums
/// combined in chunk order.
pub fn deterministic_sum<F>(len: u64, term: F) -> f64
where
    F: Fn(u64) -> f64 + Sync,
{
    let chunks = len.div_ceil(REDUCTION_CHUNK);
    let partials: Vec<CompensatedSum> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = CompensatedSum::new();
            let lo = c * REDUCTION_CHUNK;
            let hi = (lo + REDUCTION_CHUNK).min(len);
            for i in lo..hi {
                acc.add(term(i));
            }
            acc
        })
        .collect();
    let mut total = CompensatedSum::new();
    for p in &partials {
        total.merge(p);
    }
    total.value()
}

/// SplitMix64 finalizer, used to derive per-block seeds as `mix(seed ^ block)`.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ index)
}

/// FNV-1a over the little-endian bytes of each value.
pub fn fnv1a_i128<'a>(values: impl IntoIterator<Item = &'a i128>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for b in v.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// Distance from `r / p` to the nearest integer, for a residue `r` in `0..p`.
#[inline]
pub fn circle_distance(r: u64, p: u64) -> f64 {
    let d = r.min(p - r);
    d as f64 / p as f64
}

/// Real binomial coefficient `binom(x + l - 1, l)` written as a product, valid for real `x >= 0`.
pub fn rising_binomial(x: f64, l: u64) -> f64 {
    let mut acc = 1.0;
    for i in 1..=l {
        acc *= (x + i as f64 - 1.0) / i as f64;
    }
    acc
}
