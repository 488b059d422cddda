//! Hyperplanes `V = {x : a . x = 0}` met by the sign cube: Littlewood-Offord
//! counts, combinatorial dimension, Erdos' inequality, the sparse variable `Y`
//! and the weighted Odlyzko bound.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::numeric::ExactRational;

pub const MAX_LO_N: usize = 34;
pub const DEFAULT_SUM_CAP: u64 = 1_000_000;
/// Largest number of distinct partial sums kept by the atom histogram.
pub const ATOM_TABLE_CAP: usize = 1 << 22;
pub const MAX_EXACT_ODLYZKO_N: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct NormalVector {
    coeffs: Vec<i64>,
}

impl TryFrom<Vec<i64>> for NormalVector {
    type Error = Error;
    fn try_from(v: Vec<i64>) -> Result<Self> {
        NormalVector::new(v)
    }
}

impl From<NormalVector> for Vec<i64> {
    fn from(a: NormalVector) -> Self {
        a.coeffs
    }
}

impl NormalVector {
    pub fn new(coeffs: Vec<i64>) -> Result<Self> {
        if coeffs.iter().all(|&c| c == 0) {
            return Err(Error::Dimension("normal vector must have a non-zero entry".into()));
        }
        Ok(NormalVector { coeffs })
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    pub fn gcd(&self) -> i64 {
        self.coeffs.iter().fold(0i64, |g, &c| g.gcd(&c))
    }

    /// The coefficients divided by their gcd.
    pub fn reduced(&self) -> Vec<i64> {
        let g = self.gcd();
        self.coeffs.iter().map(|&c| c / g).collect()
    }

    pub fn l1_norm(&self) -> u128 {
        self.coeffs.iter().map(|&c| c.unsigned_abs() as u128).sum()
    }

    pub fn dot_signs(&self, x: &[i8]) -> i128 {
        self.coeffs.iter().zip(x).map(|(&a, &s)| a as i128 * s as i128).sum()
    }
}

/// All `2^len` signed sums `sum ±a_i` over a slice, in Gray order.
fn half_sums(a: &[i64]) -> Vec<i128> {
    let mut s: i128 = a.iter().map(|&x| x as i128).sum();
    let mut signs = vec![1i128; a.len()];
    let mut out = Vec::with_capacity(1 << a.len());
    out.push(s);
    for idx in 1u64..(1 << a.len()) {
        let j = idx.trailing_zeros() as usize;
        s -= 2 * signs[j] * a[j] as i128;
        signs[j] = -signs[j];
        out.push(s);
    }
    out
}

/// `|{x in {-1,1}^n : a . x = 0}|` by meet in the middle.
pub fn lo_count(a: &NormalVector) -> Result<u64> {
    let n = a.n();
    if n > MAX_LO_N {
        return Err(Error::resource("Littlewood-Offord dimension", n as u128, MAX_LO_N as u128));
    }
    let (left, right) = a.coeffs.split_at(n / 2);
    let mut table: HashMap<i128, u64> = HashMap::new();
    for s in half_sums(left) {
        *table.entry(s).or_insert(0) += 1;
    }
    Ok(half_sums(right).into_iter().map(|s| table.get(&-s).copied().unwrap_or(0)).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DimensionClass {
    /// `2^(d - n) <= (3/4)^n`
    Small,
    Medium,
    /// `2^(d - n) >= 100 / sqrt(n)`
    Large,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombDim {
    pub n: usize,
    pub cube_count: u64,
    /// `d_pm = d_pm_num / n`
    pub d_pm_num: u64,
    pub d_pm_den: u64,
    pub exceeds_three_quarters: bool,
    pub below_large_threshold: bool,
    pub class: DimensionClass,
}

impl CombDim {
    pub fn d_pm(&self) -> f64 {
        self.d_pm_num as f64 / self.d_pm_den as f64
    }

    /// `2^(n d - 1) < count^n <= 2^(n d)`, in integers.
    pub fn sandwich_holds(&self) -> bool {
        let c = BigUint::from(self.cube_count).pow(self.n as u32);
        let k = self.d_pm_num as usize;
        let hi = BigUint::one() << k;
        let lo_ok = k == 0 || (BigUint::one() << (k - 1)) < c;
        lo_ok && c <= hi
    }
}

pub fn comb_dimension(a: &NormalVector) -> Result<CombDim> {
    comb_dimension_from_count(a.n(), lo_count(a)?)
}

pub fn comb_dimension_from_count(n: usize, cube_count: u64) -> Result<CombDim> {
    if cube_count == 0 {
        return Err(Error::UndefinedDimension);
    }
    let c_pow = BigUint::from(cube_count).pow(n as u32);
    // smallest k with c^n <= 2^k
    let k = if c_pow.is_one() { 0 } else { (c_pow - 1u32).bits() };
    let nn = (n * n) as u64;
    // 2^(k/n - n) > (3/4)^n  <=>  2^(k + n^2) > 3^(n^2)
    let exceeds_three_quarters = (BigUint::one() << (k + nn)) > BigUint::from(3u32).pow(nn as u32);
    // 2^(k/n - n) < 100/sqrt(n)  <=>  2^(2k) n^n < 10^(4n) 2^(2n^2)
    let lhs = (BigUint::one() << (2 * k)) * BigUint::from(n).pow(n as u32);
    let rhs = BigUint::from(10u32).pow(4 * n as u32) << (2 * nn);
    let below_large_threshold = lhs < rhs;
    let class = if !exceeds_three_quarters {
        DimensionClass::Small
    } else if below_large_threshold {
        DimensionClass::Medium
    } else {
        DimensionClass::Large
    };
    Ok(CombDim {
        n,
        cube_count,
        d_pm_num: k,
        d_pm_den: n as u64,
        exceeds_three_quarters,
        below_large_threshold,
        class,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErdosCheck {
    pub max_atom: u64,
    pub bound: u64,
    pub ok: bool,
}

/// Largest atom of the distribution of `a . X` against `binom(n, floor(n/2))`.
pub fn erdos_lo_check(a: &NormalVector) -> Result<ErdosCheck> {
    let n = a.n();
    if a.coeffs.contains(&0) {
        return Err(Error::precondition("Erdos' inequality needs every coefficient non-zero"));
    }
    if n > MAX_LO_N {
        return Err(Error::resource("Littlewood-Offord dimension", n as u128, MAX_LO_N as u128));
    }
    // sorted (sum, count) histogram, grown one coefficient at a time
    let mut hist: Vec<(i128, u64)> = vec![(0, 1)];
    for &c in &a.coeffs {
        let c = c as i128;
        let mut next = Vec::with_capacity(hist.len() * 2);
        let (mut i, mut j) = (0, 0);
        let minus: Vec<(i128, u64)> = hist.iter().map(|&(s, k)| (s - c, k)).collect();
        let plus: Vec<(i128, u64)> = hist.iter().map(|&(s, k)| (s + c, k)).collect();
        let (lo, hi) = if c > 0 { (&minus, &plus) } else { (&plus, &minus) };
        while i < lo.len() || j < hi.len() {
            let take_lo = j == hi.len() || (i < lo.len() && lo[i].0 <= hi[j].0);
            let item = if take_lo {
                i += 1;
                lo[i - 1]
            } else {
                j += 1;
                hi[j - 1]
            };
            match next.last_mut() {
                Some((s, k)) if *s == item.0 => *k += item.1,
                _ => next.push(item),
            }
        }
        if next.len() > ATOM_TABLE_CAP {
            return Err(Error::resource("distinct partial sums", next.len() as u128, ATOM_TABLE_CAP as u128));
        }
        hist = next;
    }
    let max_atom = hist.iter().map(|&(_, k)| k).max().unwrap_or(0);
    let bound = binomial_u64(n as u64, n as u64 / 2);
    Ok(ErdosCheck { max_atom, bound, ok: max_atom <= bound })
}

fn binomial_u64(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// The law `eta^(mu)`: `0` with probability `1 - mu`, `+1` and `-1` with probability `mu/2` each.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SparseLawRepr", into = "SparseLawRepr")]
pub struct SparseLaw {
    mu_num: u64,
    mu_den: u64,
}

#[derive(Serialize, Deserialize)]
struct SparseLawRepr {
    mu_num: u64,
    mu_den: u64,
}

impl TryFrom<SparseLawRepr> for SparseLaw {
    type Error = Error;
    fn try_from(r: SparseLawRepr) -> Result<Self> {
        SparseLaw::new(r.mu_num, r.mu_den)
    }
}

impl From<SparseLaw> for SparseLawRepr {
    fn from(l: SparseLaw) -> Self {
        SparseLawRepr { mu_num: l.mu_num, mu_den: l.mu_den }
    }
}

impl Default for SparseLaw {
    /// `mu = 1/4 - eps0/100` with `eps0 = 1`.
    fn default() -> Self {
        SparseLaw { mu_num: 6, mu_den: 25 }
    }
}

impl SparseLaw {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num > den {
            return Err(Error::precondition(format!("mu = {num}/{den} is not a probability")));
        }
        let g = num.gcd(&den);
        Ok(SparseLaw { mu_num: num / g, mu_den: den / g })
    }

    /// Nearest simple fraction to a float (continued fractions), e.g. `0.24 -> 6/25`.
    pub fn from_f64(mu: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&mu) {
            return Err(Error::precondition(format!("mu = {mu} is not a probability")));
        }
        let r = Ratio::<i64>::approximate_float(mu)
            .ok_or_else(|| Error::precondition(format!("mu = {mu} has no rational approximation")))?;
        SparseLaw::new(*r.numer() as u64, *r.denom() as u64)
    }

    pub fn mu(&self) -> BigRational {
        BigRational::new(self.mu_num.into(), self.mu_den.into())
    }

    pub fn mu_f64(&self) -> f64 {
        self.mu_num as f64 / self.mu_den as f64
    }

    pub fn parts(&self) -> (u64, u64) {
        (self.mu_num, self.mu_den)
    }

    /// Probability of a fixed vector with `k` non-zero entries out of `n`.
    pub fn point_mass(&self, n: usize, k: usize) -> BigRational {
        let mu = self.mu();
        let half = &mu / BigInt::from(2);
        let zero = BigRational::one() - mu;
        pow(&half, k) * pow(&zero, n - k)
    }
}

fn pow(x: &BigRational, e: usize) -> BigRational {
    num_traits::pow::pow(x.clone(), e)
}

pub fn sample_y(n: usize, law: &SparseLaw, seed: u64) -> Vec<i8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_y_with(n, law, &mut rng)
}

pub fn sample_y_with<R: Rng + ?Sized>(n: usize, law: &SparseLaw, rng: &mut R) -> Vec<i8> {
    let (u, v) = law.parts();
    let zero_cut = 2 * (v - u);
    (0..n)
        .map(|_| {
            let r = rng.gen_range(0..2 * v);
            if r < zero_cut {
                0
            } else if r % 2 == 0 {
                1
            } else {
                -1
            }
        })
        .collect()
}

/// `P(a . Y = 0)` exactly. With `mu = u/v` each coordinate contributes weight
/// `2(v-u)` at 0 and `u` at `±a_i`, over a common denominator `(2v)^n`.
pub fn prob_y_hyperplane(a: &NormalVector, law: &SparseLaw, sum_cap: u64) -> Result<BigRational> {
    let l1 = a.l1_norm();
    if l1 > sum_cap as u128 {
        return Err(Error::resource("sum of |a_i|", l1, sum_cap as u128));
    }
    let (u, v) = law.parts();
    let w0 = BigUint::from(2 * (v - u));
    let w1 = BigUint::from(u);
    let mut dist: HashMap<i128, BigUint> = HashMap::from([(0, BigUint::one())]);
    for &c in &a.coeffs {
        let c = c as i128;
        let mut next: HashMap<i128, BigUint> = HashMap::with_capacity(dist.len() * 3);
        for (s, w) in &dist {
            if !w0.is_zero() {
                *next.entry(*s).or_default() += w * &w0;
            }
            if !w1.is_zero() {
                *next.entry(s + c).or_default() += w * &w1;
                *next.entry(s - c).or_default() += w * &w1;
            }
        }
        next.retain(|_, w| !w.is_zero());
        dist = next;
    }
    let num = dist.remove(&0).unwrap_or_default();
    let den = BigUint::from(2 * v).pow(a.n() as u32);
    Ok(BigRational::new(num.into(), den.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OdlyzkoMode {
    Exact,
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdlyzkoReport {
    pub n: usize,
    pub d: usize,
    pub p_hat: f64,
    /// Exact `P(Y in W)`, present in exact mode.
    pub p_exact: Option<ExactRational>,
    pub bound: f64,
    pub ci_halfwidth: Option<f64>,
    pub ok: bool,
}

/// Checks `P(Y in W) <= (1 - mu)^(n - d)` for `W` spanned by `basis`.
pub fn odlyzko_check(basis: &[Vec<i64>], n: usize, law: &SparseLaw, mode: OdlyzkoMode) -> Result<OdlyzkoReport> {
    if let Some(bad) = basis.iter().find(|v| v.len() != n) {
        return Err(Error::Dimension(format!("basis vector of length {} in dimension {n}", bad.len())));
    }
    let big = linalg::to_big(basis);
    let d = if basis.is_empty() { 0 } else { linalg::rank(&big) };
    let constraints: Vec<Vec<i128>> = linalg::integer_nullspace(&big, n)
        .into_iter()
        .map(|v| v.iter().map(|x| x.to_i128().expect("small nullspace entries")).collect())
        .collect();
    let member = |y: &[i8]| {
        constraints
            .iter()
            .all(|c| c.iter().zip(y).map(|(&ci, &yi)| ci * yi as i128).sum::<i128>() == 0)
    };
    let zero_mass = BigRational::one() - law.mu();
    let bound_exact = pow(&zero_mass, n - d);
    let bound = bound_exact.to_f64().unwrap_or(0.0);
    match mode {
        OdlyzkoMode::Exact => {
            if n > MAX_EXACT_ODLYZKO_N {
                return Err(Error::resource(
                    "exact Odlyzko dimension",
                    n as u128,
                    MAX_EXACT_ODLYZKO_N as u128,
                ));
            }
            let mut by_support = vec![0u64; n + 1];
            let mut y = vec![0i8; n];
            for idx in 0..3u64.pow(n as u32) {
                let mut t = idx;
                for yi in y.iter_mut() {
                    *yi = (t % 3) as i8 - 1;
                    t /= 3;
                }
                if member(&y) {
                    by_support[y.iter().filter(|&&v| v != 0).count()] += 1;
                }
            }
            let p: BigRational = by_support
                .iter()
                .enumerate()
                .map(|(k, &c)| law.point_mass(n, k) * BigInt::from(c))
                .fold(BigRational::zero(), |acc, x| acc + x);
            let ok = p <= bound_exact;
            Ok(OdlyzkoReport {
                n,
                d,
                p_hat: p.to_f64().unwrap_or(f64::NAN),
                p_exact: Some(ExactRational::from(&p)),
                bound,
                ci_halfwidth: None,
                ok,
            })
        }
        OdlyzkoMode::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::precondition("samples must be at least 1"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let hits = (0..samples).filter(|_| member(&sample_y_with(n, law, &mut rng))).count();
            let p_hat = hits as f64 / samples as f64;
            let ci = 1.96 * (p_hat * (1.0 - p_hat) / samples as f64).sqrt();
            Ok(OdlyzkoReport {
                n,
                d,
                p_hat,
                p_exact: None,
                bound,
                ci_halfwidth: Some(ci),
                ok: p_hat <= bound + 4.0 * ci,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop, prop_assert, prop_assert_eq, prop_assume, prop_oneof, proptest};

    fn nv(v: &[i64]) -> NormalVector {
        NormalVector::new(v.to_vec()).unwrap()
    }

    fn rat(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    fn all_signs(n: usize) -> impl Iterator<Item = Vec<i8>> {
        (0u64..1 << n).map(move |w| (0..n).map(|j| if (w >> j) & 1 == 1 { -1 } else { 1 }).collect())
    }

    fn brute_count(a: &NormalVector) -> u64 {
        all_signs(a.n()).filter(|x| a.dot_signs(x) == 0).count() as u64
    }

    /// 3^n enumeration with exact rational weights.
    fn brute_prob_y(a: &NormalVector, mu: BigRational) -> BigRational {
        let n = a.n();
        let mut total = BigRational::zero();
        for idx in 0..3u64.pow(n as u32) {
            let mut t = idx;
            let mut w = BigRational::one();
            let mut s = 0i128;
            for &c in a.coeffs() {
                let y = (t % 3) as i64 - 1;
                t /= 3;
                w *= if y == 0 { BigRational::one() - &mu } else { &mu / BigInt::from(2) };
                s += (c * y) as i128;
            }
            if s == 0 {
                total += w;
            }
        }
        total
    }

    #[test]
    fn lo_count_examples() {
        assert_eq!(lo_count(&nv(&[1, 1])).unwrap(), 2);
        assert_eq!(lo_count(&nv(&[1, 1, 1])).unwrap(), 0);
        assert_eq!(lo_count(&nv(&[1, 2, 3])).unwrap(), 2);
        assert!(lo_count(&nv(&[1; 35])).unwrap_err().is_resource());
        assert!(NormalVector::new(vec![0, 0]).is_err());
    }

    #[test]
    fn lo_count_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = rng.gen_range(1..=12);
            let v: Vec<i64> = (0..n).map(|_| rng.gen_range(-6..=6)).collect();
            let Ok(a) = NormalVector::new(v) else { continue };
            assert_eq!(lo_count(&a).unwrap(), brute_count(&a));
        }
    }

    #[test]
    fn comb_dimension_examples() {
        let d = comb_dimension(&nv(&[1, 1, 1, 1])).unwrap();
        assert_eq!((d.cube_count, d.d_pm_num, d.d_pm_den), (6, 11, 4));
        let d = comb_dimension(&nv(&[1, 1])).unwrap();
        assert_eq!((d.cube_count, d.d_pm_num, d.d_pm_den), (2, 2, 2));
        let d = comb_dimension(&nv(&[1, 2, 3])).unwrap();
        assert_eq!((d.d_pm_num, d.d_pm_den), (3, 3));
        assert_eq!(comb_dimension(&nv(&[1, 1, 1])).unwrap_err(), Error::UndefinedDimension);
    }

    #[test]
    fn dimension_classes() {
        // 2^(d-n) <= 1 < 100/sqrt(n) below n = 10^4, so desk-scale hyperplanes are never large
        let d = comb_dimension(&nv(&[1, -1, 0, 0, 0, 0])).unwrap();
        assert_eq!(d.cube_count, 32);
        assert_eq!(d.class, DimensionClass::Medium);
        let d = comb_dimension(&nv(&[1, 2, 4, 8, 16, 32, 64, 127])).unwrap();
        assert_eq!(d.cube_count, 2);
        assert_eq!(d.class, DimensionClass::Small);
        assert!(d.sandwich_holds());
    }

    #[test]
    fn erdos_examples() {
        let e = erdos_lo_check(&nv(&[1, 1, 1, 1])).unwrap();
        assert_eq!((e.max_atom, e.bound, e.ok), (6, 6, true));
        let e = erdos_lo_check(&nv(&[1, 2, 4, 8])).unwrap();
        assert_eq!((e.max_atom, e.ok), (1, true));
        assert!(matches!(erdos_lo_check(&nv(&[1, 0])), Err(Error::Precondition(_))));
    }

    #[test]
    fn erdos_random_against_histogram() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = rng.gen_range(1..=12);
            let v: Vec<i64> = (0..n)
                .map(|_| {
                    let x: i64 = rng.gen_range(1..=9);
                    if rng.gen() { x } else { -x }
                })
                .collect();
            let a = nv(&v);
            let mut hist: HashMap<i128, u64> = HashMap::new();
            for x in all_signs(n) {
                *hist.entry(a.dot_signs(&x)).or_default() += 1;
            }
            let e = erdos_lo_check(&a).unwrap();
            assert_eq!(e.max_atom, *hist.values().max().unwrap());
            assert!(e.ok);
        }
    }

    #[test]
    fn sparse_law_defaults() {
        assert_eq!(SparseLaw::default().mu(), rat(6, 25));
        assert_eq!(SparseLaw::from_f64(0.24).unwrap(), SparseLaw::default());
        assert!(SparseLaw::new(3, 2).is_err());
    }

    #[test]
    fn sample_y_examples() {
        let zero = SparseLaw::new(0, 1).unwrap();
        assert!(sample_y(50, &zero, 1).iter().all(|&y| y == 0));
        let one = SparseLaw::new(1, 1).unwrap();
        assert!(sample_y(50, &one, 1).iter().all(|&y| y == 1 || y == -1));
        let y = sample_y(100_000, &SparseLaw::default(), 7);
        let zeros = y.iter().filter(|&&v| v == 0).count() as f64 / 1e5;
        assert!((zeros - 0.76).abs() < 0.01, "{zeros}");
        assert_eq!(y, sample_y(100_000, &SparseLaw::default(), 7));
    }

    #[test]
    fn prob_y_examples() {
        let law = SparseLaw::default();
        assert_eq!(prob_y_hyperplane(&nv(&[1, 1]), &law, DEFAULT_SUM_CAP).unwrap(), rat(379, 625));
        let zero = SparseLaw::new(0, 1).unwrap();
        assert_eq!(prob_y_hyperplane(&nv(&[3, -7, 2]), &zero, DEFAULT_SUM_CAP).unwrap(), rat(1, 1));
        let a = nv(&[1, 1, 1, 1]);
        assert_eq!(prob_y_hyperplane(&a, &law, DEFAULT_SUM_CAP).unwrap(), brute_prob_y(&a, law.mu()));
        assert!(prob_y_hyperplane(&nv(&[10, 10]), &law, 19).unwrap_err().is_resource());
    }

    #[test]
    fn odlyzko_examples() {
        let law = SparseLaw::default();
        let r = odlyzko_check(&[], 2, &law, OdlyzkoMode::Exact).unwrap();
        let exact = r.p_exact.unwrap();
        assert_eq!((exact.num.as_str(), exact.den.as_str()), ("361", "625"));
        assert!(r.ok);
        let r = odlyzko_check(&[vec![1, 1]], 2, &law, OdlyzkoMode::Exact).unwrap();
        assert_eq!(r.d, 1);
        assert!((r.p_hat - 0.6064).abs() < 1e-12);
        assert!((r.bound - 0.76).abs() < 1e-12);
        assert!(r.ok);
        let mc = odlyzko_check(&[vec![1, 1]], 2, &law, OdlyzkoMode::MonteCarlo { samples: 20_000, seed: 3 }).unwrap();
        assert!((mc.p_hat - 0.6064).abs() < 4.0 * mc.ci_halfwidth.unwrap());
        assert!(mc.ok);
    }

    #[test]
    fn odlyzko_random_subspaces() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let law = SparseLaw::default();
        for _ in 0..50 {
            let n = rng.gen_range(1..=10);
            let d = rng.gen_range(0..=3.min(n));
            let basis: Vec<Vec<i64>> = (0..d).map(|_| (0..n).map(|_| rng.gen_range(-2..=2)).collect()).collect();
            let r = odlyzko_check(&basis, n, &law, OdlyzkoMode::Exact).unwrap();
            assert!(r.ok, "{basis:?} {r:?}");
        }
    }

    proptest! {
        #[test]
        fn lo_count_scale_invariant(v in prop::collection::vec(-20i64..=20, 1..=14), c in prop_oneof![-5i64..=-1, 1i64..=5]) {
            prop_assume!(v.iter().any(|&x| x != 0));
            let a = nv(&v);
            let scaled = nv(&v.iter().map(|x| x * c).collect::<Vec<_>>());
            prop_assert_eq!(lo_count(&a).unwrap(), lo_count(&scaled).unwrap());
        }

        #[test]
        fn odd_parity_has_no_solutions(v in prop::collection::vec(-15i64..=15, 1..=13)) {
            let v: Vec<i64> = v.into_iter().map(|x| 2 * x + 1).collect();
            prop_assume!(v.iter().sum::<i64>() % 2 != 0);
            prop_assert_eq!(lo_count(&nv(&v)).unwrap(), 0);
        }

        #[test]
        fn sandwich(v in prop::collection::vec(-8i64..=8, 2..=16)) {
            prop_assume!(v.iter().any(|&x| x != 0));
            if let Ok(d) = comb_dimension(&nv(&v)) {
                prop_assert!(d.sandwich_holds());
            }
        }

        #[test]
        fn full_law_recovers_cube(v in prop::collection::vec(-6i64..=6, 1..=10)) {
            prop_assume!(v.iter().any(|&x| x != 0));
            let a = nv(&v);
            let one = SparseLaw::new(1, 1).unwrap();
            let p = prob_y_hyperplane(&a, &one, DEFAULT_SUM_CAP).unwrap();
            let want = BigRational::new(lo_count(&a).unwrap().into(), BigInt::one() << a.n());
            prop_assert_eq!(p, want);
        }
    }
}
