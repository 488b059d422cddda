//! Exact and Monte-Carlo estimation of `P_n = P(det M_n = 0)` for random
//! `n x n` sign matrices, plus a comparison table against reference curves.
//!
//! Exact counts use the sign-flip symmetry `M -> D_r M D_c`: every orbit has
//! exactly `2^(2n-1)` elements and the matrices whose first row and first
//! column are all `+1` form a transversal, so only `2^((n-1)^2)` normalized
//! matrices are examined.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{choose_field_prime, det_small_i64, rank_mod_p_residues, PrimeModulus};
use crate::error::{Error, Result};
use crate::numeric::derive_seed;

pub const DEFAULT_EXACT_CAP: usize = 7;

/// Hard ceiling for exact enumeration regardless of the configured cap.
pub const MAX_EXACT_N: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactCount {
    pub n: usize,
    pub singular_count: u128,
    pub total: u128,
    /// Singular matrices among those with all-`+1` first row and first column.
    pub normalized_count: u128,
}

impl ExactCount {
    pub fn orbit_size(n: usize) -> u128 {
        1u128 << (2 * n - 1)
    }

    pub fn p_n(&self) -> f64 {
        self.singular_count as f64 / self.total as f64
    }
}

/// Enumeration strategy for the symmetry-reduced count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExactKernel {
    /// Gray-code walk over the `(n-1)^2` free bits, determinant from scratch per matrix.
    GrayCode,
    /// Unordered choice of the middle rows, then a count of completing last rows.
    RowCombination,
}

impl ExactKernel {
    /// Gray code up to `n = 5`; the row-combination kernel beyond, where the
    /// Gray walk would visit `2^25` (n = 6) or `2^36` (n = 7) matrices.
    pub fn default_for(n: usize) -> Self {
        if n <= 5 {
            ExactKernel::GrayCode
        } else {
            ExactKernel::RowCombination
        }
    }
}

pub fn exact_singularity_count(n: usize, cap: usize) -> Result<ExactCount> {
    exact_singularity_count_with(n, cap, ExactKernel::default_for(n))
}

pub fn exact_singularity_count_with(n: usize, cap: usize, kernel: ExactKernel) -> Result<ExactCount> {
    if n == 0 {
        return Err(Error::Dimension("n must be at least 1".into()));
    }
    let cap = cap.min(MAX_EXACT_N);
    if n > cap {
        return Err(Error::resource("exact enumeration dimension", n as u128, cap as u128));
    }
    let normalized_count = match kernel {
        ExactKernel::GrayCode => gray_code_count(n),
        ExactKernel::RowCombination => row_combination_count(n)?,
    };
    Ok(ExactCount {
        n,
        singular_count: normalized_count * ExactCount::orbit_size(n),
        total: 1u128 << (n * n),
        normalized_count,
    })
}

const GRAY_BLOCK_BITS: u32 = 14;

fn gray_code_count(n: usize) -> u128 {
    let free = (n - 1) * (n - 1);
    let total: u64 = 1 << free;
    let block = 1u64 << GRAY_BLOCK_BITS.min(free as u32);
    let blocks = total / block;
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = b * block;
            let mut a = vec![1i64; n * n];
            let set_from_gray = |a: &mut [i64], g: u64| {
                for bit in 0..free {
                    let (i, j) = (1 + bit / (n - 1), 1 + bit % (n - 1));
                    a[i * n + j] = if (g >> bit) & 1 == 1 { -1 } else { 1 };
                }
            };
            set_from_gray(&mut a, start ^ (start >> 1));
            let mut scratch = vec![0i64; n * n];
            let mut hits = 0u128;
            for idx in start..start + block {
                if idx != start {
                    let bit = idx.trailing_zeros() as usize;
                    let (i, j) = (1 + bit / (n - 1), 1 + bit % (n - 1));
                    a[i * n + j] = -a[i * n + j];
                }
                scratch.copy_from_slice(&a);
                if det_small_i64(&mut scratch, n) == 0 {
                    hits += 1;
                }
            }
            hits
        })
        .sum()
}

/// Counts normalized singular matrices by fixing the first row (all `+1`),
/// choosing rows `2..n-1` as a set (distinct rows; repeated rows are always
/// singular and are counted in closed form) and counting the last rows that
/// fall into the span, working over `Z/pZ` with `p > n^(n/2)`.
fn row_combination_count(n: usize) -> Result<u128> {
    if n == 1 {
        return Ok(0);
    }
    let p = choose_field_prime(n)?;
    let v = 1u64 << (n - 1); // sign vectors with first entry +1
    let middle = n - 2;
    let v128 = v as u128;
    let all_tuples = v128.pow(middle as u32);
    let distinct_tuples: u128 = (0..middle as u128).map(|i| v128 - i).product();
    let repeated = (all_tuples - distinct_tuples) * v128;
    let perms: u128 = (1..=middle as u128).product();

    let rows: Vec<Vec<u64>> = (0..v).map(|idx| sign_vector_residues(idx, n, p)).collect();
    let first = rows[0].clone();
    let start = RowEchelon::new(n, p).push(&first).expect("all-ones row is nonzero");

    let set_sum: u128 = if middle == 0 {
        count_completions(&start, n, p)
    } else {
        (0..v)
            .into_par_iter()
            .map(|c0| combination_sum(&start, &rows, c0, middle - 1, n, p))
            .sum()
    };
    Ok(repeated + perms * set_sum)
}

fn sign_vector_residues(idx: u64, n: usize, p: PrimeModulus) -> Vec<u64> {
    let mut r = vec![1u64; n];
    for j in 1..n {
        if (idx >> (j - 1)) & 1 == 1 {
            r[j] = p.value() - 1;
        }
    }
    r
}

fn combination_sum(
    echelon: &RowEchelon,
    rows: &[Vec<u64>],
    pick: u64,
    remaining: usize,
    n: usize,
    p: PrimeModulus,
) -> u128 {
    let v = rows.len() as u64;
    if v - pick - 1 < remaining as u64 {
        return 0;
    }
    let next = match echelon.push(&rows[pick as usize]) {
        Some(e) => e,
        None => {
            // dependent prefix: every completion is singular
            let completions = binomial_u128((v - pick - 1) as u128, remaining as u128);
            return completions * v as u128;
        }
    };
    if remaining == 0 {
        return count_completions(&next, n, p);
    }
    (pick + 1..v)
        .map(|c| combination_sum(&next, rows, c, remaining - 1, n, p))
        .sum()
}

fn binomial_u128(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let mut acc = 1u128;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Number of last rows (first entry `+1`) lying in the span of `n - 1` independent rows.
fn count_completions(echelon: &RowEchelon, n: usize, p: PrimeModulus) -> u128 {
    let kernel = echelon.kernel_vector();
    let pv = p.value() as i64;
    let k: Vec<i64> = kernel.iter().map(|&x| x as i64).collect();
    let mut s: i64 = k.iter().sum();
    let mut signs = vec![1i64; n];
    let mut hits = u128::from(s.rem_euclid(pv) == 0);
    for idx in 1u64..(1 << (n - 1)) {
        let j = 1 + idx.trailing_zeros() as usize;
        s -= 2 * signs[j] * k[j];
        signs[j] = -signs[j];
        if s.rem_euclid(pv) == 0 {
            hits += 1;
        }
    }
    hits
}

/// Reduced row echelon form over `Z/pZ`, grown one row at a time.
#[derive(Clone)]
struct RowEchelon {
    n: usize,
    p: PrimeModulus,
    rows: Vec<Vec<u64>>,
    pivots: Vec<usize>,
}

impl RowEchelon {
    fn new(n: usize, p: PrimeModulus) -> Self {
        RowEchelon { n, p, rows: Vec::new(), pivots: Vec::new() }
    }

    /// Returns the extended echelon form, or `None` if `row` is already in the span.
    fn push(&self, row: &[u64]) -> Option<RowEchelon> {
        let p = self.p;
        let mut r = row.to_vec();
        for (er, &pc) in self.rows.iter().zip(&self.pivots) {
            let f = r[pc];
            if f != 0 {
                for j in 0..self.n {
                    r[j] = p.sub(r[j], p.mul(f, er[j]));
                }
            }
        }
        let pc = r.iter().position(|&x| x != 0)?;
        let inv = p.inv(r[pc]).expect("nonzero pivot");
        for x in r.iter_mut() {
            *x = p.mul(*x, inv);
        }
        let mut next = self.clone();
        for er in next.rows.iter_mut() {
            let f = er[pc];
            if f != 0 {
                for j in 0..self.n {
                    er[j] = p.sub(er[j], p.mul(f, r[j]));
                }
            }
        }
        next.rows.push(r);
        next.pivots.push(pc);
        Some(next)
    }

    /// Kernel vector of a rank `n - 1` echelon form.
    fn kernel_vector(&self) -> Vec<u64> {
        debug_assert_eq!(self.rows.len(), self.n - 1);
        let free = (0..self.n).find(|c| !self.pivots.contains(c)).expect("one free column");
        let mut k = vec![0u64; self.n];
        k[free] = 1;
        for (er, &pc) in self.rows.iter().zip(&self.pivots) {
            k[pc] = self.p.sub(0, er[free]);
        }
        k
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub n: usize,
    pub trials: u64,
    pub hits: u64,
    pub estimate: f64,
    pub ci_halfwidth: f64,
    pub seed: u64,
}

const MC_BLOCK: u64 = 1 << 12;

/// The three 61-bit primes used as independent singularity witnesses for large `n`.
pub fn witness_primes() -> [PrimeModulus; 3] {
    let mut out = [PrimeModulus::new(3).unwrap(); 3];
    let mut c = (1u64 << 61) - 1;
    for slot in out.iter_mut() {
        while !crate::arith::is_prime(c) {
            c -= 2;
        }
        *slot = PrimeModulus::new(c).expect("prime");
        c -= 2;
    }
    out
}

/// Monte-Carlo estimate of `P_n`. Trials are split into fixed blocks of 4096;
/// block `b` draws from ChaCha8 seeded with `splitmix64(seed ^ b)`, so the
/// result depends only on `(n, trials, seed)`.
pub fn mc_singularity_estimate(n: usize, trials: u64, seed: u64) -> Result<McEstimate> {
    if trials == 0 {
        return Err(Error::precondition("trials must be at least 1"));
    }
    if n == 0 {
        return Err(Error::Dimension("n must be at least 1".into()));
    }
    let primes: Vec<PrimeModulus> = if n <= 12 {
        vec![choose_field_prime(n)?]
    } else {
        witness_primes().to_vec()
    };
    let blocks = trials.div_ceil(MC_BLOCK);
    let hits: u64 = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, b));
            let count = MC_BLOCK.min(trials - b * MC_BLOCK);
            let mut signs = vec![false; n * n];
            let mut scratch = vec![0u64; n * n];
            let mut hits = 0u64;
            for _ in 0..count {
                for s in signs.iter_mut() {
                    *s = rng.gen::<bool>();
                }
                hits += u64::from(singular_mod_all(&signs, n, &primes, &mut scratch));
            }
            hits
        })
        .sum();
    let estimate = hits as f64 / trials as f64;
    let ci_halfwidth = 1.96 * (estimate * (1.0 - estimate) / trials as f64).sqrt();
    Ok(McEstimate { n, trials, hits, estimate, ci_halfwidth, seed })
}

/// Rank-deficient modulo every prime in `primes`. Entries are `true` for `-1`.
fn singular_mod_all(signs: &[bool], n: usize, primes: &[PrimeModulus], scratch: &mut [u64]) -> bool {
    primes.iter().all(|&p| {
        for (dst, &neg) in scratch.iter_mut().zip(signs) {
            *dst = if neg { p.value() - 1 } else { 1 };
        }
        rank_mod_p_residues(scratch, n, n, p) < n
    })
}

/// Number of `n x n` sign matrices with two rows, or two columns, equal up to sign.
///
/// After normalizing the first row and column to `+1`, the complement event is
/// "the `(n-1) x (n-1)` free block has distinct non-zero rows and distinct
/// non-zero columns". That count is obtained by Moebius inversion over column
/// partitions (signed Stirling numbers of the first kind) and inclusion-exclusion
/// over forced-zero columns.
pub fn parallel_lines_count(n: usize) -> BigInt {
    if n <= 1 {
        return BigInt::zero();
    }
    let m = n - 1;
    let falling = |top: &BigInt, k: usize| -> BigInt {
        let mut acc = BigInt::one();
        for i in 0..k {
            acc *= top - BigInt::from(i);
        }
        acc
    };
    let binom = |a: usize, b: usize| -> BigInt {
        let mut acc = BigInt::one();
        for i in 0..b {
            acc = acc * BigInt::from(a - i) / BigInt::from(i + 1);
        }
        acc
    };
    // rows distinct and non-zero, columns non-zero, for an m x k block
    let h = |k: usize| -> BigInt {
        let mut acc = BigInt::zero();
        for j in 0..=k {
            let top = (BigInt::one() << (k - j)) - BigInt::one();
            let term = binom(k, j) * falling(&top, m);
            if j % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        acc
    };
    let stirling = signed_stirling_first(m);
    let clean: BigInt = (1..=m).map(|k| &stirling[k] * h(k)).sum();
    let normalized_total = BigInt::one() << (m * m);
    (normalized_total - clean) << (2 * n - 1)
}

/// Signed Stirling numbers of the first kind `s(m, k)` for `k = 0..=m`.
fn signed_stirling_first(m: usize) -> Vec<BigInt> {
    let mut row = vec![BigInt::one()];
    for i in 0..m {
        let mut next = vec![BigInt::zero(); row.len() + 1];
        for (k, c) in row.iter().enumerate() {
            next[k + 1] += c;
            next[k] -= c * BigInt::from(i);
        }
        row = next;
    }
    row
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub n: usize,
    pub singular_count: u128,
    pub total: u128,
    pub p_n: f64,
    /// `n^2 2^(1-n)`
    pub conjectured: f64,
    /// `(3/4)^n`
    pub three_quarters: f64,
    pub ratio_to_conjectured: f64,
    pub ratio_to_three_quarters: f64,
    pub parallel_lines_count: u128,
    pub parallel_lines_probability: f64,
    pub pn_at_least_parallel_lines: bool,
    pub note: Option<String>,
}

pub fn bound_report(n_max: usize, cap: usize) -> Result<Vec<BoundRow>> {
    (1..=n_max)
        .map(|n| {
            let exact = exact_singularity_count(n, cap)?;
            let p_n = exact.p_n();
            let conjectured = (n * n) as f64 * 2f64.powi(1 - n as i32);
            let three_quarters = 0.75f64.powi(n as i32);
            let witness = parallel_lines_count(n);
            let witness_u = witness.to_u128().expect("count below 2^(n^2)");
            let note = (conjectured > 1.0)
                .then(|| "asymptotic formula exceeds 1 at this n".to_string());
            Ok(BoundRow {
                n,
                singular_count: exact.singular_count,
                total: exact.total,
                p_n,
                conjectured,
                three_quarters,
                ratio_to_conjectured: p_n / conjectured,
                ratio_to_three_quarters: p_n / three_quarters,
                parallel_lines_count: witness_u,
                parallel_lines_probability: witness_u as f64 / exact.total as f64,
                pn_at_least_parallel_lines: exact.singular_count >= witness_u
                    && !witness.is_negative(),
                note,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// All `2^(n^2)` matrices, no symmetry reduction.
    fn naive_singular(n: usize) -> u128 {
        let mut hits = 0;
        let mut a = vec![0i64; n * n];
        for w in 0u64..(1 << (n * n)) {
            for (k, x) in a.iter_mut().enumerate() {
                *x = if (w >> k) & 1 == 1 { -1 } else { 1 };
            }
            if det_small_i64(&mut a, n) == 0 {
                hits += 1;
            }
        }
        hits
    }

    fn naive_parallel(n: usize) -> u128 {
        let mut hits = 0;
        for w in 0u64..(1 << (n * n)) {
            let e = |i: usize, j: usize| -> i8 { if (w >> (i * n + j)) & 1 == 1 { -1 } else { 1 } };
            let mut found = false;
            'outer: for a in 0..n {
                for b in a + 1..n {
                    let row_eq = (0..n).all(|j| e(a, j) == e(b, j));
                    let row_neg = (0..n).all(|j| e(a, j) == -e(b, j));
                    let col_eq = (0..n).all(|i| e(i, a) == e(i, b));
                    let col_neg = (0..n).all(|i| e(i, a) == -e(i, b));
                    if row_eq || row_neg || col_eq || col_neg {
                        found = true;
                        break 'outer;
                    }
                }
            }
            hits += u128::from(found);
        }
        hits
    }

    #[test]
    fn small_exact_counts() {
        assert_eq!(exact_singularity_count(1, 7).unwrap().singular_count, 0);
        let two = exact_singularity_count(2, 7).unwrap();
        assert_eq!((two.singular_count, two.total), (8, 16));
    }

    #[test]
    fn orbit_factor_matches_naive_enumeration() {
        for n in 1..=4 {
            let want = naive_singular(n);
            for kernel in [ExactKernel::GrayCode, ExactKernel::RowCombination] {
                let got = exact_singularity_count_with(n, 7, kernel).unwrap();
                assert_eq!(got.singular_count, want, "n={n} {kernel:?}");
                assert_eq!(got.singular_count, got.normalized_count * ExactCount::orbit_size(n));
            }
        }
    }

    #[test]
    fn kernels_agree_at_five() {
        let g = exact_singularity_count_with(5, 7, ExactKernel::GrayCode).unwrap();
        let r = exact_singularity_count_with(5, 7, ExactKernel::RowCombination).unwrap();
        assert_eq!(g, r);
    }

    #[test]
    fn cap_is_enforced() {
        let err = exact_singularity_count(6, 5).unwrap_err();
        assert!(err.is_resource());
        assert!(err.to_string().contains("cap is 5"));
    }

    #[test]
    fn parallel_lines_formula_matches_exhaustive() {
        for n in 1..=4 {
            assert_eq!(parallel_lines_count(n), BigInt::from(naive_parallel(n)), "n={n}");
        }
    }

    #[test]
    fn witness_event_is_below_pn() {
        for n in 1..=5 {
            let exact = exact_singularity_count(n, 7).unwrap();
            assert!(BigInt::from(exact.singular_count) >= parallel_lines_count(n));
        }
    }

    #[test]
    fn mc_examples() {
        let two = mc_singularity_estimate(2, 100_000, 1).unwrap();
        assert!((two.estimate - 0.5).abs() < 0.02);
        let one = mc_singularity_estimate(1, 1000, 1).unwrap();
        assert_eq!(one.estimate, 0.0);
        assert!(mc_singularity_estimate(3, 0, 1).is_err());
    }

    #[test]
    fn mc_is_deterministic() {
        let a = mc_singularity_estimate(5, 20_000, 42).unwrap();
        let b = mc_singularity_estimate(5, 20_000, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        let c = mc_singularity_estimate(5, 20_000, 43).unwrap();
        assert_ne!(a.hits, c.hits);
    }

    #[test]
    fn three_prime_witness_matches_exact_determinant() {
        use crate::arith::{det_bareiss, SignMatrix};
        let w = witness_primes();
        assert!(w.iter().all(|p| p.value() > 1 << 60));
        assert!(w[0] != w[1] && w[1] != w[2]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 14;
        let mut scratch = vec![0u64; n * n];
        let mut singular_seen = 0;
        for trial in 0..400 {
            let mut m = SignMatrix::random(n, &mut rng);
            if trial % 4 == 0 {
                // force a repeated row
                for j in 0..n {
                    let neg = m.entry(0, j) < 0;
                    m.set_negative(1, j, neg);
                }
            }
            let signs: Vec<bool> = (0..n * n).map(|k| m.entry(k / n, k % n) < 0).collect();
            let exact = det_bareiss(&m.to_int_matrix()).unwrap().is_zero();
            assert_eq!(singular_mod_all(&signs, n, &w, &mut scratch), exact);
            singular_seen += usize::from(exact);
        }
        assert!(singular_seen >= 100);
        let est = mc_singularity_estimate(14, 2000, 3).unwrap();
        assert!(est.estimate > 0.0 && est.estimate < 0.5);
    }

    #[test]
    fn report_rows() {
        let rows = bound_report(3, 7).unwrap();
        assert_eq!(rows[0].p_n, 0.0);
        assert_eq!(rows[1].p_n, 0.5);
        assert_eq!(rows[1].conjectured, 2.0);
        assert!(rows[1].note.is_some());
        assert!(rows.iter().all(|r| r.pn_at_least_parallel_lines));
    }
}
