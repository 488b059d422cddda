//! Exact integer and modular linear algebra shared by the other modules.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MR_BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

#[inline]
fn mul_mod_u64(a: u64, b: u64, m: u64) -> u64 {
    if m <= u32::MAX as u64 {
        (a * b) % m
    } else {
        ((a as u128 * b as u128) % m as u128) as u64
    }
}

fn pow_mod_u64(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod_u64(acc, base, m);
        }
        base = mul_mod_u64(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin, exact for every `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &b in &MR_BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &MR_BASES {
        let mut x = pow_mod_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod_u64(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Smallest prime `>= n`, or `None` past `u64::MAX`.
pub fn next_prime(n: u64) -> Option<u64> {
    let mut c = n.max(2);
    loop {
        if is_prime(c) {
            return Some(c);
        }
        c = c.checked_add(1)?;
    }
}

/// An odd prime modulus `p`, the order of the field `F = Z/pZ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct PrimeModulus(u64);

impl TryFrom<u64> for PrimeModulus {
    type Error = Error;
    fn try_from(p: u64) -> Result<Self> {
        PrimeModulus::new(p)
    }
}

impl From<PrimeModulus> for u64 {
    fn from(p: PrimeModulus) -> u64 {
        p.0
    }
}

impl std::fmt::Display for PrimeModulus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl PrimeModulus {
    pub fn new(p: u64) -> Result<Self> {
        if p < 3 || p.is_multiple_of(2) || !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(PrimeModulus(p))
    }

    /// Smallest odd prime strictly greater than `bound`.
    pub fn above(bound: u64) -> Result<Self> {
        let start = bound
            .checked_add(1)
            .ok_or_else(|| Error::Overflow(format!("no machine-word prime above {bound}")))?;
        let mut p = next_prime(start.max(3))
            .ok_or_else(|| Error::Overflow(format!("no machine-word prime above {bound}")))?;
        if p == 2 {
            p = 3;
        }
        Ok(PrimeModulus(p))
    }

    #[inline]
    pub fn value(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn mul(self, a: u64, b: u64) -> u64 {
        mul_mod_u64(a, b, self.0)
    }

    #[inline]
    pub fn add(self, a: u64, b: u64) -> u64 {
        let s = a as u128 + b as u128;
        (s % self.0 as u128) as u64
    }

    #[inline]
    pub fn sub(self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            self.0 - (b - a)
        }
    }

    pub fn pow(self, a: u64, e: u64) -> u64 {
        pow_mod_u64(a, e, self.0)
    }

    /// Inverse of a non-zero residue.
    pub fn inv(self, a: u64) -> Option<u64> {
        let a = a % self.0;
        if a == 0 {
            None
        } else {
            Some(self.pow(a, self.0 - 2))
        }
    }

    /// Canonical residue in `0..p`.
    #[inline]
    pub fn reduce(self, x: i128) -> u64 {
        x.rem_euclid(self.0 as i128) as u64
    }

    /// Centered representative in `(-p/2, p/2]`.
    #[inline]
    pub fn centered(self, x: i128) -> i128 {
        let r = self.reduce(x) as i128;
        if 2 * r > self.0 as i128 {
            r - self.0 as i128
        } else {
            r
        }
    }

    pub fn reduce_big(self, x: &BigInt) -> u64 {
        let p = BigInt::from(self.0);
        x.mod_floor(&p).to_u64().expect("residue fits in u64")
    }
}

/// Dense integer matrix with arbitrary-precision entries, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigInt>,
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<BigInt>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension("matrix needs at least one row and column".into()));
        }
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(IntMatrix { rows, cols, entries })
    }

    pub fn from_rows<T: Into<BigInt> + Copy>(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        let entries = rows.iter().flat_map(|row| row.iter().map(|&x| x.into())).collect();
        IntMatrix::new(r, c, entries)
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![BigInt::zero(); n * n];
        for i in 0..n {
            entries[i * n + i] = BigInt::one();
        }
        IntMatrix { rows: n, cols: n, entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
}

/// An `n x n` matrix over `{-1, +1}` packed one bit per entry (`0 -> +1`, `1 -> -1`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignMatrix {
    n: usize,
    bits: Vec<u64>,
}

impl SignMatrix {
    /// All-`+1` matrix (the all-zero bit pattern).
    pub fn ones(n: usize) -> Self {
        SignMatrix { n, bits: vec![0; (n * n).div_ceil(64).max(1)] }
    }

    /// Builds from packed words; bit `i*n + j` is entry `(i, j)`.
    pub fn from_words(n: usize, words: Vec<u64>) -> Result<Self> {
        let need = (n * n).div_ceil(64).max(1);
        if words.len() != need {
            return Err(Error::Dimension(format!("{} words for n={n}, need {need}", words.len())));
        }
        let mut m = SignMatrix { n, bits: words };
        let extra = need * 64 - n * n;
        if extra > 0 {
            let last = m.bits.last_mut().expect("nonempty");
            *last &= u64::MAX >> extra;
        }
        Ok(m)
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> i8) -> Self {
        let mut m = SignMatrix::ones(n);
        for i in 0..n {
            for j in 0..n {
                if f(i, j) < 0 {
                    m.set_negative(i, j, true);
                }
            }
        }
        m
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let words = (n * n).div_ceil(64).max(1);
        let bits = (0..words).map(|_| rng.gen::<u64>()).collect();
        SignMatrix::from_words(n, bits).expect("word count matches")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn words(&self) -> &[u64] {
        &self.bits
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> i8 {
        let k = i * self.n + j;
        if (self.bits[k / 64] >> (k % 64)) & 1 == 1 {
            -1
        } else {
            1
        }
    }

    pub fn set_negative(&mut self, i: usize, j: usize, negative: bool) {
        let k = i * self.n + j;
        if negative {
            self.bits[k / 64] |= 1 << (k % 64);
        } else {
            self.bits[k / 64] &= !(1 << (k % 64));
        }
    }

    pub fn to_int_matrix(&self) -> IntMatrix {
        let entries = (0..self.n * self.n)
            .map(|k| BigInt::from(self.entry(k / self.n, k % self.n)))
            .collect();
        IntMatrix::new(self.n.max(1), self.n.max(1), entries).expect("square")
    }

    /// Inverse of `to_int_matrix`; fails unless every entry is `+-1`.
    pub fn from_int_matrix(m: &IntMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension("sign matrices are square".into()));
        }
        let n = m.rows();
        let mut s = SignMatrix::ones(n);
        for i in 0..n {
            for j in 0..n {
                let v = m.get(i, j);
                if v == &BigInt::from(-1) {
                    s.set_negative(i, j, true);
                } else if !v.is_one() {
                    return Err(Error::precondition(format!("entry ({i},{j}) = {v} is not +-1")));
                }
            }
        }
        Ok(s)
    }

    /// Entries as `i64`, row-major.
    pub fn to_i64(&self) -> Vec<i64> {
        (0..self.n * self.n).map(|k| self.entry(k / self.n, k % self.n) as i64).collect()
    }
}

/// Exact determinant by Bareiss fraction-free elimination.
pub fn det_bareiss(m: &IntMatrix) -> Result<BigInt> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("determinant of a {}x{} matrix", m.rows(), m.cols())));
    }
    let n = m.rows();
    let mut a: Vec<Vec<BigInt>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    let mut sign = false;
    let mut prev = BigInt::one();
    for k in 0..n {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    sign = !sign;
                }
                None => return Ok(BigInt::zero()),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = t / &prev;
            }
            a[i][k] = BigInt::zero();
        }
        prev = a[k][k].clone();
    }
    let d = a[n - 1][n - 1].clone();
    Ok(if sign { -d } else { d })
}

/// Bareiss determinant on a small row-major `i64` matrix, destroying the input.
/// Exact whenever every minor and every product of two minors fits in `i64`,
/// which holds for sign matrices up to `n = 12` by Hadamard's bound.
pub fn det_small_i64(a: &mut [i64], n: usize) -> i64 {
    debug_assert_eq!(a.len(), n * n);
    let mut sign = 1i64;
    let mut prev = 1i64;
    for k in 0..n {
        if a[k * n + k] == 0 {
            match (k + 1..n).find(|&r| a[r * n + k] != 0) {
                Some(r) => {
                    for j in 0..n {
                        a.swap(k * n + j, r * n + j);
                    }
                    sign = -sign;
                }
                None => return 0,
            }
        }
        let pivot = a[k * n + k];
        for i in k + 1..n {
            let lead = a[i * n + k];
            for j in k + 1..n {
                a[i * n + j] = (a[i * n + j] * pivot - lead * a[k * n + j]) / prev;
            }
            a[i * n + k] = 0;
        }
        prev = pivot;
    }
    sign * a[n * n - 1]
}

/// Rank over `Z/pZ` of a row-major residue matrix by fraction-free elimination
/// (row_i <- pivot * row_i - lead * row_pivot, no inverses). Destroys the input.
pub fn rank_mod_p_residues(a: &mut [u64], rows: usize, cols: usize, p: PrimeModulus) -> usize {
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(r) = (rank..rows).find(|&r| a[r * cols + c] != 0) else {
            continue;
        };
        if r != rank {
            for j in 0..cols {
                a.swap(r * cols + j, rank * cols + j);
            }
        }
        let pivot = a[rank * cols + c];
        for i in rank + 1..rows {
            let lead = a[i * cols + c];
            if lead == 0 {
                continue;
            }
            for j in c..cols {
                let x = p.mul(a[i * cols + j], pivot);
                let y = p.mul(lead, a[rank * cols + j]);
                a[i * cols + j] = p.sub(x, y);
            }
        }
        rank += 1;
    }
    rank
}

/// Rank of `m` over `Z/pZ`.
pub fn rank_mod_p(m: &IntMatrix, p: PrimeModulus) -> usize {
    let mut a: Vec<u64> = m.entries.iter().map(|x| p.reduce_big(x)).collect();
    rank_mod_p_residues(&mut a, m.rows(), m.cols(), p)
}

/// Rank of a sign matrix over `Z/pZ`.
pub fn sign_rank_mod_p(s: &SignMatrix, p: PrimeModulus) -> usize {
    let n = s.n();
    let minus = p.value() - 1;
    let mut a: Vec<u64> = (0..n * n)
        .map(|k| if s.entry(k / n, k % n) < 0 { minus } else { 1 })
        .collect();
    rank_mod_p_residues(&mut a, n, n, p)
}

/// `n^n` as a big integer.
fn n_pow_n(n: u32) -> BigUint {
    BigUint::from(n).pow(n)
}

/// Smallest prime strictly greater than `n^(n/2)`, the field size that makes
/// singularity over `Z/pZ` equivalent to singularity over the integers.
///
/// For odd `n` the bound is irrational unless `n` is a square; the comparison
/// is done exactly as `p^2 > n^n`. The result is forced odd (`n = 1` gives 3).
pub fn choose_field_prime(n: usize) -> Result<PrimeModulus> {
    if n == 0 {
        return Err(Error::Dimension("n must be at least 1".into()));
    }
    let nn = n_pow_n(n as u32);
    let root = nn.sqrt();
    // root^2 <= n^n < (root+1)^2, so root+1 is the least integer whose square exceeds n^n
    // unless root^2 == n^n, in which case root+1 is still the least integer above n^(n/2).
    let start = root + BigUint::one();
    let start = start.to_u64().ok_or_else(|| {
        Error::Overflow(format!(
            "n^(n/2) for n={n} exceeds a machine word; a big-integer field is required"
        ))
    })?;
    let p = next_prime(start.max(3)).ok_or_else(|| {
        Error::Overflow(format!("no machine-word prime above n^(n/2) for n={n}"))
    })?;
    PrimeModulus::new(p)
}

/// Hadamard's bound check `|det| <= n^(n/2)`, done as `det^2 <= n^n`.
pub fn within_hadamard(det: &BigInt, n: usize) -> bool {
    let sq = (det.abs() * det.abs()).to_biguint().expect("non-negative");
    sq <= n_pow_n(n as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Cofactor expansion along the first row; O(n!) oracle.
    fn det_cofactor(m: &[Vec<i64>]) -> i64 {
        let n = m.len();
        if n == 1 {
            return m[0][0];
        }
        let mut acc = 0;
        for j in 0..n {
            let minor: Vec<Vec<i64>> = m[1..]
                .iter()
                .map(|row| row.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, &x)| x).collect())
                .collect();
            let s = if j % 2 == 0 { 1 } else { -1 };
            acc += s * m[0][j] * det_cofactor(&minor);
        }
        acc
    }

    fn random_rows(rng: &mut ChaCha8Rng, n: usize, lo: i64, hi: i64) -> Vec<Vec<i64>> {
        (0..n).map(|_| (0..n).map(|_| rng.gen_range(lo..=hi)).collect()).collect()
    }

    #[test]
    fn det_identity_and_two_by_two() {
        assert_eq!(det_bareiss(&IntMatrix::identity(3)).unwrap(), BigInt::from(1));
        let m = IntMatrix::from_rows(&[vec![1i64, 1], vec![1, -1]]).unwrap();
        assert_eq!(det_bareiss(&m).unwrap(), BigInt::from(-2));
    }

    #[test]
    fn det_rejects_non_square() {
        let m = IntMatrix::from_rows(&[vec![1i64, 2, 3], vec![4, 5, 6]]).unwrap();
        assert!(matches!(det_bareiss(&m), Err(Error::Dimension(_))));
    }

    #[test]
    fn det_matches_cofactor_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=6 {
            for _ in 0..10 {
                let rows = random_rows(&mut rng, n, -1, 1);
                let want = det_cofactor(&rows);
                let m = IntMatrix::from_rows(&rows).unwrap();
                assert_eq!(det_bareiss(&m).unwrap(), BigInt::from(want));
                let mut flat: Vec<i64> = rows.concat();
                assert_eq!(det_small_i64(&mut flat, n), want);
            }
        }
        // random 5x5 sign matrix
        let s = SignMatrix::random(5, &mut rng);
        let rows: Vec<Vec<i64>> = (0..5).map(|i| (0..5).map(|j| s.entry(i, j) as i64).collect()).collect();
        assert_eq!(det_bareiss(&s.to_int_matrix()).unwrap(), BigInt::from(det_cofactor(&rows)));
    }

    #[test]
    fn rank_examples() {
        let ones = IntMatrix::from_rows(&[vec![1i64; 3], vec![1; 3], vec![1; 3]]).unwrap();
        assert_eq!(rank_mod_p(&ones, PrimeModulus::new(7).unwrap()), 1);
        assert_eq!(rank_mod_p(&IntMatrix::identity(4), PrimeModulus::new(5).unwrap()), 4);
    }

    #[test]
    fn rank_deficiency_agrees_with_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 0..20 {
            let n = 1 + k % 6;
            let s = SignMatrix::random(n, &mut rng);
            let p = choose_field_prime(n).unwrap();
            let det = det_bareiss(&s.to_int_matrix()).unwrap();
            assert_eq!(rank_mod_p(&s.to_int_matrix(), p) < n, det.is_zero());
        }
    }

    #[test]
    fn det_mod_p_matches_modular_elimination() {
        // determinant over Z/pZ by Gauss elimination with inverses, independent of Bareiss
        fn det_mod(rows: &[Vec<i64>], p: PrimeModulus) -> u64 {
            let n = rows.len();
            let mut a: Vec<Vec<u64>> =
                rows.iter().map(|r| r.iter().map(|&x| p.reduce(x as i128)).collect()).collect();
            let mut det = 1u64;
            for c in 0..n {
                let Some(r) = (c..n).find(|&r| a[r][c] != 0) else { return 0 };
                if r != c {
                    a.swap(r, c);
                    det = p.sub(0, det);
                }
                det = p.mul(det, a[c][c]);
                let inv = p.inv(a[c][c]).unwrap();
                for i in c + 1..n {
                    let f = p.mul(a[i][c], inv);
                    for j in c..n {
                        let t = p.mul(f, a[c][j]);
                        a[i][j] = p.sub(a[i][j], t);
                    }
                }
            }
            det
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &p in &[5u64, 17, 101] {
            let p = PrimeModulus::new(p).unwrap();
            for k in 0..100 {
                let n = 1 + k % 5;
                let rows = random_rows(&mut rng, n, -9, 9);
                let det = det_bareiss(&IntMatrix::from_rows(&rows).unwrap()).unwrap();
                assert_eq!(p.reduce_big(&det), det_mod(&rows, p));
            }
        }
    }

    #[test]
    fn hadamard_bound_holds() {
        // exhaustive n <= 3
        for n in 1..=3usize {
            for w in 0..(1u64 << (n * n)) {
                let s = SignMatrix::from_words(n, vec![w]).unwrap();
                assert!(within_hadamard(&det_bareiss(&s.to_int_matrix()).unwrap(), n));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 4..=10 {
            for _ in 0..20 {
                let s = SignMatrix::random(n, &mut rng);
                assert!(within_hadamard(&det_bareiss(&s.to_int_matrix()).unwrap(), n));
            }
        }
    }

    #[test]
    fn field_prime_examples() {
        assert_eq!(choose_field_prime(4).unwrap().value(), 17);
        assert_eq!(choose_field_prime(2).unwrap().value(), 3);
        assert_eq!(choose_field_prime(1).unwrap().value(), 3);
        // 9^4.5 = 3^9 = 19683 exactly; scan upward with trial division
        let trial = |q: u64| q > 1 && (2..q).take_while(|d| d * d <= q).all(|d| !q.is_multiple_of(d));
        let want = (19684u64..).find(|&q| trial(q)).unwrap();
        assert_eq!(choose_field_prime(9).unwrap().value(), want);
        // odd non-square n: 5^2.5 = 55.9..., so the prime must exceed 55.9
        assert_eq!(choose_field_prime(5).unwrap().value(), 59);
        assert!(matches!(choose_field_prime(40), Err(Error::Overflow(_))));
    }

    #[test]
    fn primality_small_and_large() {
        let trial = |q: u64| q > 1 && (2..q).take_while(|d| d * d <= q).all(|d| !q.is_multiple_of(d));
        for q in 0..5000u64 {
            assert_eq!(is_prime(q), trial(q), "q = {q}");
        }
        assert!(is_prime((1 << 61) - 1));
        assert!(!is_prime(((1u64 << 31) - 1) * ((1 << 31) - 1)));
        assert!(PrimeModulus::new(2).is_err());
        assert!(PrimeModulus::new(15).is_err());
    }

    #[test]
    fn sign_matrix_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 1..=9 {
            let s = SignMatrix::random(n, &mut rng);
            assert_eq!(SignMatrix::from_int_matrix(&s.to_int_matrix()).unwrap(), s);
        }
        assert_eq!(SignMatrix::ones(3).entry(2, 2), 1);
    }
}
