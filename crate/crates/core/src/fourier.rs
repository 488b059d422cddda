//! Fourier side of the hyperplane estimates over `F = Z/pZ`: the products `f`
//! and `g`, character-sum formulas for `P(X in V)` and `P(Y in V)`, the
//! spectrum `Λ`, the `Λ`-norm and its Bohr set, the normalized transform `h`
//! with Parseval and representation-count identities, and sumset growth of `Λ`.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{choose_field_prime, next_prime, PrimeModulus};
use crate::error::{Error, Result};
use crate::hyperplane::{lo_count, prob_y_hyperplane, CombDim, NormalVector, SparseLaw, DEFAULT_SUM_CAP};
use crate::numeric::{circle_distance, deterministic_sum, rising_binomial, CompensatedSum, ExactRational};

/// Largest modulus for a full scan of `F_p`.
pub const SCAN_CAP: u64 = 10_000_000;
pub const DEFAULT_BOHR_SCAN_CAP: u64 = 1_000_000;
pub const DEFAULT_WORK_CAP: u128 = 2_000_000_000;
pub const DEFAULT_REP_CAP: u128 = 100_000_000;
pub const BOUNDARY_TOL: f64 = 1e-12;
pub const DEFAULT_BOHR_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamChain {
    pub eps0: f64,
    pub eps1: f64,
    pub eps2: f64,
}

impl Default for ParamChain {
    fn default() -> Self {
        ParamChain { eps0: 1.0, eps1: 1e-2, eps2: 1e-4 }
    }
}

impl ParamChain {
    /// Requires `0 < eps2 < eps1 < eps0 <= 1`; `eps0 = 1` is admitted so that the
    /// default chain (with `mu = 0.24`) is valid.
    pub fn validate(&self) -> Result<()> {
        let ParamChain { eps0, eps1, eps2 } = *self;
        if 0.0 < eps2 && eps2 < eps1 && eps1 < eps0 && eps0 <= 1.0 {
            Ok(())
        } else {
            Err(Error::precondition(format!(
                "parameter chain must satisfy 0 < eps2 < eps1 < eps0 <= 1, got ({eps0}, {eps1}, {eps2})"
            )))
        }
    }

    pub fn mu(&self) -> f64 {
        0.25 - self.eps0 / 100.0
    }

    pub fn law(&self) -> Result<SparseLaw> {
        SparseLaw::from_f64(self.mu())
    }

    /// Number of sampled rows `m`, the integer nearest `eps0 n / 100`.
    pub fn sample_count(&self, n: usize) -> usize {
        (self.eps0 * n as f64 / 100.0).round() as usize
    }
}

/// Smallest prime above `sum |a_i|` and, for `n <= 12`, above `n^(n/2)`.
/// Returns a note when the second requirement was dropped.
pub fn fourier_prime(a: &NormalVector) -> Result<(PrimeModulus, Option<String>)> {
    let l1 = u64::try_from(a.l1_norm()).map_err(|_| Error::Overflow("sum of |a_i| exceeds a machine word".into()))?;
    let mut start = l1 + 1;
    let mut note = None;
    if a.n() <= 12 {
        start = start.max(choose_field_prime(a.n())?.value());
    } else {
        note = Some(format!("n = {} > 12: modulus only exceeds sum |a_i| = {l1}", a.n()));
    }
    let p = next_prime(start.max(3)).ok_or_else(|| Error::Overflow("no machine-word prime".into()))?;
    Ok((PrimeModulus::new(p)?, note))
}

fn check_modulus(a: &NormalVector, p: PrimeModulus) -> Result<()> {
    if (p.value() as u128) <= a.l1_norm() {
        return Err(Error::precondition(format!(
            "p = {} must exceed sum |a_i| = {}",
            p.value(),
            a.l1_norm()
        )));
    }
    Ok(())
}

fn check_scan(p: PrimeModulus, cap: u64) -> Result<()> {
    if p.value() > cap {
        return Err(Error::resource("F_p scan size", p.value() as u128, cap as u128));
    }
    Ok(())
}

fn residues(a: &[i64], p: PrimeModulus) -> Vec<u64> {
    a.iter().map(|&c| p.reduce(c as i128)).collect()
}

#[inline]
fn scaled(r: u64, xi: u64, p: u64) -> u64 {
    ((r as u128 * xi as u128) % p as u128) as u64
}

/// `r ξ mod p` folded into `[0, p/2]`; cosines of `π` and `2π` multiples of
/// the phase are unchanged (up to sign for `π`), and evaluation becomes exactly even in `ξ`.
#[inline]
fn folded(r: u64, xi: u64, p: u64) -> f64 {
    let t = scaled(r, xi, p);
    t.min(p - t) as f64 / p as f64
}

fn f_residues(r: &[u64], xi: u64, p: u64) -> f64 {
    r.iter()
        .map(|&c| (PI * folded(c, xi, p)).cos().abs())
        .product::<f64>()
        .clamp(0.0, 1.0)
}

fn g_residues(r: &[u64], xi: u64, p: u64, mu: f64) -> f64 {
    r.iter()
        .map(|&c| (1.0 - mu) + mu * (2.0 * PI * folded(c, xi, p)).cos())
        .product::<f64>()
        .clamp(0.0, 1.0)
}

fn signed_residues(r: &[u64], xi: u64, p: u64) -> f64 {
    r.iter().map(|&c| (2.0 * PI * folded(c, xi, p)).cos()).product()
}

/// `f(ξ) = prod_j |cos(π a_j ξ / p)|`.
pub fn f_value(a: &NormalVector, xi: i64, p: PrimeModulus) -> f64 {
    f_residues(&residues(a.coeffs(), p), p.reduce(xi as i128), p.value())
}

/// `g(ξ) = prod_j ((1 - μ) + μ cos(2π a_j ξ / p))`.
pub fn g_value(a: &NormalVector, xi: i64, p: PrimeModulus, mu: f64) -> f64 {
    g_residues(&residues(a.coeffs(), p), p.reduce(xi as i128), p.value(), mu)
}

/// `(1/p) sum_ξ prod_j cos(2π a_j ξ / p)`, equal to `P(a . X = 0)` when `p > sum |a_i|`.
pub fn prob_x_fourier(a: &NormalVector, p: PrimeModulus) -> Result<f64> {
    check_modulus(a, p)?;
    check_scan(p, SCAN_CAP)?;
    let r = residues(a.coeffs(), p);
    let pv = p.value();
    Ok(deterministic_sum(pv, |xi| signed_residues(&r, xi, pv)) / pv as f64)
}

/// `(1/p) sum_ξ g(ξ)`, equal to `P(a . Y = 0)` when `p > sum |a_i|`.
pub fn prob_y_fourier(a: &NormalVector, p: PrimeModulus, mu: f64) -> Result<f64> {
    check_modulus(a, p)?;
    check_scan(p, SCAN_CAP)?;
    let r = residues(a.coeffs(), p);
    let pv = p.value();
    Ok(deterministic_sum(pv, |xi| g_residues(&r, xi, pv, mu)) / pv as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarInequalityReport {
    pub mu: f64,
    pub grid_points: u64,
    pub violations: u64,
    pub max_violation: f64,
}

/// Evaluates `|cos x| - ((1 - μ) + μ cos 2x)` on an even grid of `[0, π/2]`,
/// which covers every `x` by symmetry. Excesses above `1e-12` count as violations.
pub fn scalar_inequality_check(mu: f64, grid_points: u64) -> ScalarInequalityReport {
    let last = grid_points.saturating_sub(1).max(1) as f64;
    let (violations, max_violation) = (0..grid_points)
        .into_par_iter()
        .map(|i| {
            let x = PI / 2.0 * i as f64 / last;
            let excess = x.cos().abs() - ((1.0 - mu) + mu * (2.0 * x).cos());
            (u64::from(excess > BOUNDARY_TOL), excess)
        })
        .reduce(|| (0, f64::NEG_INFINITY), |a, b| (a.0 + b.0, a.1.max(b.1)));
    ScalarInequalityReport { mu, grid_points, violations, max_violation }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub p: u64,
    pub mu: f64,
    pub points: u64,
    /// `max_ξ f(ξ) - g(ξ)^(1/4μ)`
    pub max_f_over_gpow: f64,
    /// `max_ξ g(ξ)^(1/4μ) - g(ξ)`
    pub max_gpow_over_g: f64,
    pub max_f_over_g: f64,
    pub violations: u64,
    pub ok: bool,
}

/// Checks `f <= g^(1/4μ) <= g` at every `ξ in F_p`.
pub fn comparison_check(a: &NormalVector, p: PrimeModulus, mu: f64) -> Result<ComparisonReport> {
    if !(mu > 0.0 && mu <= 0.25) {
        return Err(Error::precondition(format!("comparison needs 0 < mu <= 1/4, got {mu}")));
    }
    check_modulus(a, p)?;
    check_scan(p, SCAN_CAP)?;
    let r = residues(a.coeffs(), p);
    let pv = p.value();
    let expo = 1.0 / (4.0 * mu);
    let (m1, m2, m3, v) = (0..pv)
        .into_par_iter()
        .map(|xi| {
            let f = f_residues(&r, xi, pv);
            let g = g_residues(&r, xi, pv, mu);
            let gp = g.powf(expo);
            let (d1, d2, d3) = (f - gp, gp - g, f - g);
            let bad = d1 > BOUNDARY_TOL || d2 > BOUNDARY_TOL || d3 > BOUNDARY_TOL;
            (d1, d2, d3, u64::from(bad))
        })
        .reduce(
            || (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY, 0),
            |a, b| (a.0.max(b.0), a.1.max(b.1), a.2.max(b.2), a.3 + b.3),
        );
    Ok(ComparisonReport {
        p: pv,
        mu,
        points: pv,
        max_f_over_gpow: m1,
        max_gpow_over_g: m2,
        max_f_over_g: m3,
        violations: v,
        ok: v == 0,
    })
}

/// A set `Λ ⊆ F_p` of centered residues, usually `{ξ : f(ξ) >= ε2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub p: PrimeModulus,
    /// Empty for sets given directly.
    pub coeffs: Vec<i64>,
    pub eps2: Option<f64>,
    /// Sorted, in `(-p/2, p/2]`.
    pub members: Vec<i64>,
    /// Members admitted within `1e-12` of the threshold.
    pub boundary: Vec<i64>,
    pub warning: Option<String>,
}

impl Spectrum {
    pub fn from_members(p: PrimeModulus, members: impl IntoIterator<Item = i64>) -> Self {
        let mut m: Vec<i64> = members.into_iter().map(|x| p.centered(x as i128) as i64).collect();
        m.sort_unstable();
        m.dedup();
        Spectrum { p, coeffs: Vec::new(), eps2: None, members: m, boundary: Vec::new(), warning: None }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_symmetric(&self) -> bool {
        let p = self.p;
        self.members
            .iter()
            .all(|&x| self.members.binary_search(&(p.centered(-(x as i128)) as i64)).is_ok())
    }

    fn residues(&self) -> Vec<u64> {
        self.members.iter().map(|&x| self.p.reduce(x as i128)).collect()
    }

    fn require_nonempty(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::precondition("the spectrum is empty"));
        }
        Ok(())
    }
}

/// `Λ = {ξ : f(ξ) >= ε2}` by a full scan of `F_p`.
pub fn spectrum(a: &NormalVector, p: PrimeModulus, eps2: f64) -> Result<Spectrum> {
    check_modulus(a, p)?;
    check_scan(p, SCAN_CAP)?;
    let r = residues(a.coeffs(), p);
    let pv = p.value();
    let hits: Vec<(u64, bool)> = (0..pv)
        .into_par_iter()
        .filter_map(|xi| {
            let f = f_residues(&r, xi, pv);
            (f >= eps2 - BOUNDARY_TOL).then(|| (xi, (f - eps2).abs() <= BOUNDARY_TOL))
        })
        .collect();
    let mut members: Vec<i64> = hits.iter().map(|&(x, _)| p.centered(x as i128) as i64).collect();
    let mut boundary: Vec<i64> = hits.iter().filter(|h| h.1).map(|&(x, _)| p.centered(x as i128) as i64).collect();
    members.sort_unstable();
    boundary.sort_unstable();
    let warning = (eps2 > 1.0).then(|| format!("eps2 = {eps2} exceeds 1, so the spectrum is empty"));
    Ok(Spectrum { p, coeffs: a.coeffs().to_vec(), eps2: Some(eps2), members, boundary, warning })
}

/// Histogram of the differences `ξ - ξ'` over ordered pairs of `Λ`.
#[derive(Debug, Clone)]
pub struct DifferenceTable {
    p: u64,
    pairs: u64,
    /// `(residue, multiplicity)`, sorted by residue.
    diffs: Vec<(u64, u64)>,
}

impl DifferenceTable {
    pub fn new(spec: &Spectrum) -> Result<Self> {
        spec.require_nonempty()?;
        let m = spec.len() as u128;
        if m * m > DEFAULT_WORK_CAP {
            return Err(Error::resource("spectrum difference pairs", m * m, DEFAULT_WORK_CAP));
        }
        let p = spec.p;
        let res = spec.residues();
        let mut counts: HashMap<u64, u64> = HashMap::new();
        for &x in &res {
            for &y in &res {
                *counts.entry(p.sub(x, y)).or_insert(0) += 1;
            }
        }
        let mut diffs: Vec<(u64, u64)> = counts.into_iter().collect();
        diffs.sort_unstable();
        Ok(DifferenceTable { p: p.value(), pairs: (m * m) as u64, diffs })
    }

    pub fn distinct(&self) -> usize {
        self.diffs.len()
    }

    /// `‖x‖_Λ^2`.
    pub fn norm_sq(&self, x: u64) -> f64 {
        let mut acc = CompensatedSum::new();
        for &(d, c) in &self.diffs {
            let t = circle_distance(scaled(d, x, self.p), self.p);
            acc.add(c as f64 * t * t);
        }
        acc.value() / self.pairs as f64
    }

    /// Whether `‖x‖_Λ^2 <= bound`, stopping once the partial sum is past it.
    fn norm_sq_at_most(&self, x: u64, bound: f64) -> bool {
        let limit = bound * self.pairs as f64;
        let mut acc = CompensatedSum::new();
        for &(d, c) in &self.diffs {
            let t = circle_distance(scaled(d, x, self.p), self.p);
            acc.add(c as f64 * t * t);
            if acc.value() > limit {
                return false;
            }
        }
        true
    }

    /// `|h(x)|^2` through the same histogram.
    pub fn h_sq(&self, x: u64) -> f64 {
        let mut acc = CompensatedSum::new();
        for &(d, c) in &self.diffs {
            acc.add(c as f64 * (2.0 * PI * scaled(d, x, self.p) as f64 / self.p as f64).cos());
        }
        acc.value() / self.pairs as f64
    }
}

/// `‖x‖_Λ`, the root mean square of `‖x(ξ - ξ')/p‖` over pairs in `Λ`.
pub fn lambda_norm(x: i64, spec: &Spectrum) -> Result<f64> {
    let table = DifferenceTable::new(spec)?;
    Ok(table.norm_sq(spec.p.reduce(x as i128)).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BohrSet {
    pub p: u64,
    pub spectrum_size: usize,
    pub threshold: f64,
    /// Sorted, in `(-p/2, p/2]`.
    pub members: Vec<i64>,
    /// `|A + A|`, absent when the sumset exceeded the work cap.
    pub sumset_size: Option<u64>,
    /// `|A| / 2^(n - d_pm)` when a combinatorial dimension was supplied.
    pub size_ratio: Option<f64>,
}

impl BohrSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// `A = {x : ‖x‖_Λ <= threshold}` by a full scan of `F_p`.
pub fn bohr_set(spec: &Spectrum, threshold: f64, scan_cap: u64, comb: Option<&CombDim>) -> Result<BohrSet> {
    spec.require_nonempty()?;
    check_scan(spec.p, scan_cap)?;
    let table = DifferenceTable::new(spec)?;
    let pv = spec.p.value();
    let work = pv as u128 * table.distinct() as u128;
    if work > DEFAULT_WORK_CAP {
        return Err(Error::resource("Bohr scan work", work, DEFAULT_WORK_CAP));
    }
    let bound = threshold * threshold + BOUNDARY_TOL;
    let hits: Vec<u64> = (0..pv).into_par_iter().filter(|&x| table.norm_sq_at_most(x, bound)).collect();
    let mut members: Vec<i64> = hits.iter().map(|&x| spec.p.centered(x as i128) as i64).collect();
    members.sort_unstable();
    let sumset_size = cyclic_sumset(&hits, &hits, spec.p, DEFAULT_WORK_CAP).ok().map(|s| s.len() as u64);
    let size_ratio = comb.map(|c| {
        let log2_target = c.n as f64 - c.d_pm();
        members.len() as f64 / log2_target.exp2()
    });
    Ok(BohrSet { p: pv, spectrum_size: spec.len(), threshold, members, sumset_size, size_ratio })
}

/// `B + C` in `F_p` for residue lists, sorted. Saturates to all of `F_p` once
/// `|B| + |C| > p`.
pub fn cyclic_sumset(b: &[u64], c: &[u64], p: PrimeModulus, work_cap: u128) -> Result<Vec<u64>> {
    let pv = p.value();
    if b.is_empty() || c.is_empty() {
        return Ok(Vec::new());
    }
    if (b.len() + c.len()) as u64 > pv {
        return Ok((0..pv).collect());
    }
    let work = b.len() as u128 * c.len() as u128;
    if work > work_cap {
        return Err(Error::resource("cyclic sumset work", work, work_cap));
    }
    let mut mark = vec![false; pv as usize];
    for &x in b {
        for &y in c {
            mark[p.add(x, y) as usize] = true;
        }
    }
    Ok((0..pv).filter(|&x| mark[x as usize]).collect())
}

/// `h(x) = (1/|Λ|) sum_{ξ in Λ} e(xξ/p)`.
pub fn h_transform(x: i64, spec: &Spectrum) -> Result<Complex64> {
    spec.require_nonempty()?;
    Ok(h_residue(spec.p.reduce(x as i128), &spec.residues(), spec.p.value()))
}

fn h_residue(x: u64, members: &[u64], p: u64) -> Complex64 {
    let (mut re, mut im) = (CompensatedSum::new(), CompensatedSum::new());
    for &xi in members {
        let t = 2.0 * PI * scaled(xi, x, p) as f64 / p as f64;
        re.add(t.cos());
        im.add(t.sin());
    }
    Complex64::new(re.value(), im.value()) / members.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsevalReport {
    pub p: u64,
    pub spectrum_size: usize,
    pub sum_h_sq: f64,
    pub expected: f64,
    pub relative_residual: f64,
    /// Points where `|h(x)|^2 < 1 - 100 ‖x‖_Λ^2`.
    pub lower_bridge_violations: u64,
    /// Points where `|h(x)|^2 > 1 - ‖x‖_Λ^2 / 100`.
    pub upper_bridge_violations: u64,
    pub ok: bool,
}

pub const PARSEVAL_TOL: f64 = 1e-6;
const BRIDGE_TOL: f64 = 1e-9;

/// `sum_x |h(x)|^2 = p/|Λ|` with `h` evaluated directly from `Λ`, plus the two
/// pointwise bounds relating `|h(x)|^2` to `‖x‖_Λ^2` at every `x`.
pub fn parseval_check(spec: &Spectrum) -> Result<ParsevalReport> {
    spec.require_nonempty()?;
    check_scan(spec.p, SCAN_CAP)?;
    let table = DifferenceTable::new(spec)?;
    let pv = spec.p.value();
    let work = pv as u128 * (spec.len() + table.distinct()) as u128;
    if work > DEFAULT_WORK_CAP {
        return Err(Error::resource("Parseval scan work", work, DEFAULT_WORK_CAP));
    }
    let res = spec.residues();
    let points: Vec<(f64, bool, bool)> = (0..pv)
        .into_par_iter()
        .map(|x| {
            let h2 = h_residue(x, &res, pv).norm_sqr();
            let n2 = table.norm_sq(x);
            (h2, h2 < 1.0 - 100.0 * n2 - BRIDGE_TOL, h2 > 1.0 - n2 / 100.0 + BRIDGE_TOL)
        })
        .collect();
    let sum_h_sq = deterministic_sum(pv, |x| points[x as usize].0);
    let expected = pv as f64 / spec.len() as f64;
    let relative_residual = (sum_h_sq - expected).abs() / expected;
    let lower = points.iter().filter(|t| t.1).count() as u64;
    let upper = points.iter().filter(|t| t.2).count() as u64;
    Ok(ParsevalReport {
        p: pv,
        spectrum_size: spec.len(),
        sum_h_sq,
        expected,
        relative_residual,
        lower_bridge_violations: lower,
        upper_bridge_violations: upper,
        ok: relative_residual <= PARSEVAL_TOL && lower == 0 && upper == 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepCounts {
    pub k: u32,
    /// `(ξ, r_k(ξ))` over the support, `ξ` centered and sorted.
    pub counts: Vec<(i64, u128)>,
    pub total: u128,
    pub lambda_pow_k: u128,
    pub sum_sq: u128,
    pub k_fold_size: u64,
    pub total_ok: bool,
    pub cauchy_schwarz_ok: bool,
    pub fourier_max_error: f64,
    pub fourier_ok: bool,
}

/// `r_k(ξ) = |{(ξ_1..ξ_k) in Λ^k : ξ_1 + ... + ξ_k = ξ}|`.
pub fn rep_counts(spec: &Spectrum, k: u32, cap: u128, seed: u64) -> Result<RepCounts> {
    spec.require_nonempty()?;
    if k == 0 {
        return Err(Error::precondition("k must be at least 1"));
    }
    let m = spec.len() as u128;
    let lambda_pow_k = m
        .checked_pow(k)
        .filter(|&w| w <= cap)
        .ok_or_else(|| Error::resource("|Λ|^k representation work", m.saturating_pow(k), cap))?;
    let p = spec.p;
    let res = spec.residues();
    let mut dist: HashMap<u64, u128> = res.iter().map(|&x| (x, 1)).collect();
    for _ in 1..k {
        let mut next: HashMap<u64, u128> = HashMap::with_capacity(dist.len() * 2);
        for (&s, &c) in &dist {
            for &x in &res {
                *next.entry(p.add(s, x)).or_insert(0) += c;
            }
        }
        dist = next;
    }
    let mut counts: Vec<(i64, u128)> = dist.iter().map(|(&x, &c)| (p.centered(x as i128) as i64, c)).collect();
    counts.sort_unstable();
    let total: u128 = counts.iter().map(|c| c.1).sum();
    let sum_sq: u128 = counts.iter().map(|c| c.1 * c.1).sum();
    let k_fold_size = counts.len() as u64;
    let cauchy_schwarz_ok = sum_sq * k_fold_size as u128 >= lambda_pow_k * lambda_pow_k;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pv = p.value();
    let mut fourier_max_error: f64 = 0.0;
    for _ in 0..10 {
        let x = rng.gen_range(0..pv);
        let (mut re, mut im) = (CompensatedSum::new(), CompensatedSum::new());
        for &(xi, c) in &counts {
            let t = 2.0 * PI * scaled(p.reduce(xi as i128), x, pv) as f64 / pv as f64;
            re.add(c as f64 * t.cos());
            im.add(c as f64 * t.sin());
        }
        let lhs = Complex64::new(re.value(), im.value());
        let rhs = h_residue(x, &res, pv).powu(k) * lambda_pow_k as f64;
        fourier_max_error = fourier_max_error.max((lhs - rhs).norm() / lambda_pow_k as f64);
    }
    Ok(RepCounts {
        k,
        counts,
        total,
        lambda_pow_k,
        sum_sq,
        k_fold_size,
        total_ok: total == lambda_pow_k,
        cauchy_schwarz_ok,
        fourier_max_error,
        fourier_ok: fourier_max_error <= 1e-9,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceptionalLabel {
    pub exceptional: bool,
    pub p_x: ExactRational,
    pub p_y: ExactRational,
    pub p_x_at_most_p_y: bool,
}

/// Exceptional iff `P(X in V) >= ε1 P(Y in V)`, both sides exact.
pub fn classify_exceptional(a: &NormalVector, p: PrimeModulus, params: &ParamChain) -> Result<ExceptionalLabel> {
    check_modulus(a, p)?;
    let law = params.law()?;
    let p_x = BigRational::new(BigInt::from(lo_count(a)?), BigInt::one() << a.n());
    let p_y = prob_y_hyperplane(a, &law, DEFAULT_SUM_CAP)?;
    let eps1 = BigRational::from_float(params.eps1)
        .ok_or_else(|| Error::precondition("eps1 must be finite"))?;
    Ok(ExceptionalLabel {
        exceptional: p_x >= &eps1 * &p_y,
        p_x_at_most_p_y: p_x <= p_y,
        p_x: ExactRational::from(&p_x),
        p_y: ExactRational::from(&p_y),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub k: u32,
    pub size: u64,
    /// `binom(C + k - 3, k - 2) C |Λ|` for `k >= 2`.
    pub ruzsa_bound: Option<f64>,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub spectrum_size: usize,
    pub doubling: f64,
    /// `C = |4Λ| / |Λ|`
    pub c_four: f64,
    pub rows: Vec<GrowthRow>,
    pub ok: bool,
}

/// `|kΛ|` for `k = 1..=max(k_max, 4)` as cyclic sumsets, with the bound
/// `|kΛ| <= binom(C + k - 3, k - 2) C |Λ|`, `C = |4Λ|/|Λ|`.
pub fn lambda_growth(spec: &Spectrum, k_max: u32, work_cap: u128) -> Result<GrowthReport> {
    spec.require_nonempty()?;
    let base = spec.residues();
    let top = k_max.max(4);
    let mut sets = vec![base.clone()];
    let mut spent: u128 = 0;
    for _ in 1..top {
        let prev = sets.last().expect("non-empty");
        spent += prev.len() as u128 * base.len() as u128;
        if spent > work_cap {
            return Err(Error::resource("spectrum sumset work", spent, work_cap));
        }
        sets.push(cyclic_sumset(prev, &base, spec.p, work_cap)?);
    }
    let m = spec.len() as f64;
    let c_four = sets[3].len() as f64 / m;
    let rows: Vec<GrowthRow> = sets
        .iter()
        .enumerate()
        .take(k_max.max(1) as usize)
        .map(|(i, s)| {
            let k = i as u32 + 1;
            let ruzsa_bound = (k >= 2).then(|| rising_binomial(c_four, (k - 2) as u64) * c_four * m);
            let ok = ruzsa_bound.is_none_or(|b| s.len() as f64 <= b * (1.0 + 1e-12));
            GrowthRow { k, size: s.len() as u64, ruzsa_bound, ok }
        })
        .collect();
    Ok(GrowthReport {
        spectrum_size: spec.len(),
        doubling: sets[1].len() as f64 / m,
        c_four,
        ok: rows.iter().all(|r| r.ok),
        rows,
    })
}

/// The four sums compared in the spectrum size estimate, logged without pass/fail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaChain {
    pub sum_f_on_spectrum: f64,
    pub sum_f: f64,
    pub sum_g: f64,
    pub p_times_prob_x: f64,
    pub p_times_dim_mass: Option<f64>,
    /// `|Λ| 2^(n - d_pm) / p`
    pub spectrum_ratio: Option<f64>,
}

pub fn theta_chain(a: &NormalVector, spec: &Spectrum, mu: f64, comb: Option<&CombDim>) -> Result<ThetaChain> {
    let p = spec.p;
    check_modulus(a, p)?;
    check_scan(p, SCAN_CAP)?;
    let r = residues(a.coeffs(), p);
    let pv = p.value();
    let res = spec.residues();
    let sum_f_on_spectrum = deterministic_sum(res.len() as u64, |i| f_residues(&r, res[i as usize], pv));
    let sum_f = deterministic_sum(pv, |xi| f_residues(&r, xi, pv));
    let sum_g = deterministic_sum(pv, |xi| g_residues(&r, xi, pv, mu));
    let p_times_prob_x = lo_count(a)? as f64 / (a.n() as f64).exp2() * pv as f64;
    let mass = comb.map(|c| (c.d_pm() - c.n as f64).exp2());
    Ok(ThetaChain {
        sum_f_on_spectrum,
        sum_f,
        sum_g,
        p_times_prob_x,
        p_times_dim_mass: mass.map(|m| m * pv as f64),
        spectrum_ratio: mass.map(|m| spec.len() as f64 / (m * pv as f64)),
    })
}

#[cfg(test)]
mod tests {
    use num_traits::ToPrimitive;
    use super::*;

    fn nv(v: &[i64]) -> NormalVector {
        NormalVector::new(v.to_vec()).unwrap()
    }

    fn p(v: u64) -> PrimeModulus {
        PrimeModulus::new(v).unwrap()
    }

    #[test]
    fn f_and_g_at_zero_and_closed_form() {
        let a = nv(&[1, 1, 1, 1]);
        assert_eq!(f_value(&a, 0, p(17)), 1.0);
        assert_eq!(g_value(&a, 0, p(17), 0.24), 1.0);
        for xi in -8..=8 {
            let closed = (PI * xi as f64 / 17.0).cos().abs().powi(4);
            assert!((f_value(&a, xi, p(17)) - closed).abs() < 1e-14);
        }
    }

    #[test]
    fn f_and_g_are_even() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let a: Vec<i64> = (0..rng.gen_range(1..8)).map(|_| rng.gen_range(1..20)).collect();
            let a = nv(&a);
            let xi = rng.gen_range(-500..500);
            assert_eq!(f_value(&a, xi, p(1009)), f_value(&a, -xi, p(1009)));
            assert_eq!(g_value(&a, xi, p(1009), 0.24), g_value(&a, -xi, p(1009), 0.24));
        }
    }

    #[test]
    fn fourier_probability_examples() {
        let a = nv(&[1, 1, 1, 1]);
        assert!((prob_x_fourier(&a, p(17)).unwrap() - 0.375).abs() < 1e-9);
        assert!((prob_x_fourier(&nv(&[1, 2, 3]), p(17)).unwrap() - 0.25).abs() < 1e-9);
        let exact = prob_y_hyperplane(&a, &SparseLaw::default(), DEFAULT_SUM_CAP).unwrap();
        let py = prob_y_fourier(&a, p(17), 0.24).unwrap();
        assert!((py - exact.to_f64().unwrap()).abs() < 1e-9);
        assert!((py - 0.43467).abs() < 1e-5);
        assert!(matches!(prob_x_fourier(&nv(&[5, 5]), p(7)), Err(Error::Precondition(_))));
    }

    #[test]
    fn default_prime_rule() {
        assert_eq!(fourier_prime(&nv(&[1, 1, 1, 1])).unwrap().0.value(), 17);
        let (q, note) = fourier_prime(&nv(&[1; 13])).unwrap();
        assert_eq!(q.value(), 17);
        assert!(note.is_some());
    }

    #[test]
    fn scalar_inequality_sharpness() {
        let at = scalar_inequality_check(0.25, 1_000_000);
        assert_eq!(at.violations, 0);
        let past = scalar_inequality_check(0.26, 1_000_000);
        assert!(past.violations > 0);
        // μ = 1/4: equality at x = 0 and 0 <= 1/2 at x = π/2
        assert!(at.max_violation.abs() < 1e-15);
    }

    #[test]
    fn comparison_full_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let a: Vec<i64> = (0..rng.gen_range(1..10)).map(|_| rng.gen_range(-40..40)).collect();
            let Ok(a) = NormalVector::new(a) else { continue };
            let r = comparison_check(&a, p(997), 0.24).unwrap();
            assert!(r.ok, "{r:?}");
        }
        assert!(comparison_check(&nv(&[1]), p(17), 0.3).is_err());
    }

    #[test]
    fn spectrum_examples() {
        let a = nv(&[1, 1, 1, 1]);
        let s = spectrum(&a, p(17), 0.5).unwrap();
        assert_eq!(s.members, vec![-3, -2, -1, 0, 1, 2, 3]);
        assert!(s.is_symmetric());
        let empty = spectrum(&a, p(17), 1.5).unwrap();
        assert!(empty.is_empty() && empty.warning.is_some());
        let all = spectrum(&nv(&[1, 2]), p(17), 1e-300).unwrap();
        assert_eq!(all.len(), 17);
    }

    #[test]
    fn lambda_norm_examples() {
        let s = spectrum(&nv(&[1, 1, 1, 1]), p(17), 0.5).unwrap();
        assert_eq!(lambda_norm(0, &s).unwrap(), 0.0);
        let zero = Spectrum::from_members(p(17), [0]);
        for x in 0..17 {
            assert_eq!(lambda_norm(x, &zero).unwrap(), 0.0);
        }
        assert!(lambda_norm(1, &Spectrum::from_members(p(17), [])).is_err());
    }

    /// Direct double sum over pairs, without the difference histogram.
    fn norm_direct(x: i64, s: &Spectrum) -> f64 {
        let pv = s.p.value() as i128;
        let mut acc = 0.0;
        for &u in &s.members {
            for &v in &s.members {
                let r = ((x as i128 * (u - v) as i128).rem_euclid(pv)) as u64;
                let d = circle_distance(r, pv as u64);
                acc += d * d;
            }
        }
        (acc / (s.len() * s.len()) as f64).sqrt()
    }

    #[test]
    fn lambda_norm_triangle_and_direct() {
        let s = spectrum(&nv(&[1, 3, 4]), p(101), 0.2).unwrap();
        let table = DifferenceTable::new(&s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let norm = |x: i64| table.norm_sq(s.p.reduce(x as i128)).sqrt();
        for _ in 0..1000 {
            let (x, y) = (rng.gen_range(-50..50), rng.gen_range(-50..50));
            assert!(norm(x + y) <= norm(x) + norm(y) + 1e-12);
            assert_eq!(norm(x), norm(-x));
        }
        for x in 0..101 {
            assert!((norm(x) - norm_direct(x, &s)).abs() < 1e-12);
        }
    }

    #[test]
    fn bohr_examples() {
        let zero = Spectrum::from_members(p(17), [0]);
        assert_eq!(bohr_set(&zero, 0.01, DEFAULT_BOHR_SCAN_CAP, None).unwrap().len(), 17);
        let s = spectrum(&nv(&[1, 1, 1, 1]), p(17), 0.5).unwrap();
        let b = bohr_set(&s, 0.01, DEFAULT_BOHR_SCAN_CAP, None).unwrap();
        let direct: Vec<i64> = (-8..=8).filter(|&x| norm_direct(x, &s) <= 0.01).collect();
        assert_eq!(b.members, direct);
        assert!(b.members.contains(&0));
        assert!(b.members.iter().all(|x| b.members.contains(&-x)));
        assert!(bohr_set(&s, 0.01, 10, None).unwrap_err().is_resource());
        let wide = bohr_set(&s, 0.3, DEFAULT_BOHR_SCAN_CAP, None).unwrap();
        assert!(wide.len() > 1);
        assert!(wide.members.iter().all(|x| wide.members.contains(&-x)));
    }

    #[test]
    fn h_and_parseval() {
        let s = spectrum(&nv(&[1, 1, 1, 1]), p(17), 0.5).unwrap();
        assert!((h_transform(0, &s).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let r = parseval_check(&s).unwrap();
        assert!(r.relative_residual < 1e-9 && r.ok, "{r:?}");
        let zero = Spectrum::from_members(p(17), [0]);
        let r = parseval_check(&zero).unwrap();
        assert!((r.sum_h_sq - 17.0).abs() < 1e-12);
    }

    #[test]
    fn rep_count_examples() {
        let zero = Spectrum::from_members(p(101), [0]);
        let r = rep_counts(&zero, 5, DEFAULT_REP_CAP, 0).unwrap();
        assert_eq!(r.counts, vec![(0, 1)]);
        let three = Spectrum::from_members(p(101), [-1, 0, 1]);
        let r = rep_counts(&three, 2, DEFAULT_REP_CAP, 0).unwrap();
        assert_eq!(r.counts, vec![(-2, 1), (-1, 2), (0, 3), (1, 2), (2, 1)]);
        assert!(r.total_ok && r.cauchy_schwarz_ok && r.fourier_ok);
        assert!(rep_counts(&three, 20, DEFAULT_REP_CAP, 0).unwrap_err().is_resource());
    }

    #[test]
    fn rep_counts_random_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let q = p(next_prime(rng.gen_range(50..3000)).unwrap());
            let members: Vec<i64> = (0..rng.gen_range(1..30)).map(|_| rng.gen_range(0..q.value() as i64)).collect();
            let s = Spectrum::from_members(q, members);
            let r = rep_counts(&s, 3, DEFAULT_REP_CAP, 9).unwrap();
            assert!(r.total_ok && r.cauchy_schwarz_ok && r.fourier_ok, "{r:?}");
        }
    }

    #[test]
    fn classification_examples() {
        let params = ParamChain::default();
        let c = classify_exceptional(&nv(&[1, 1, 1, 1]), p(17), &params).unwrap();
        assert!(c.exceptional && c.p_x_at_most_p_y);
        assert_eq!(c.p_x.value, 0.375);
        let zero_eps = ParamChain { eps1: 0.0, eps2: 0.0, ..params };
        let c = classify_exceptional(&nv(&[3, 7, 1]), p(17), &zero_eps).unwrap();
        assert!(c.exceptional);
        let powers: Vec<i64> = (0..8).map(|i| 1 << i).collect();
        let c = classify_exceptional(&nv(&powers), p(257), &params).unwrap();
        assert_eq!(c.p_x.value, 0.0);
        assert!(!c.exceptional);
    }

    #[test]
    fn param_chain() {
        let d = ParamChain::default();
        d.validate().unwrap();
        assert_eq!(d.law().unwrap(), SparseLaw::default());
        assert_eq!(d.sample_count(250), 3);
        assert!(ParamChain { eps2: 0.5, ..d }.validate().is_err());
    }

    #[test]
    fn growth_examples() {
        let s = spectrum(&nv(&[1, 1, 1, 1]), p(1009), 0.9).unwrap();
        let interval_half = *s.members.last().unwrap();
        let g = lambda_growth(&s, 6, DEFAULT_WORK_CAP).unwrap();
        for row in &g.rows {
            assert_eq!(row.size, 2 * interval_half as u64 * row.k as u64 + 1);
        }
        assert!(g.doubling < 2.0 && g.ok);
        let zero = Spectrum::from_members(p(101), [0]);
        let g = lambda_growth(&zero, 5, DEFAULT_WORK_CAP).unwrap();
        assert!(g.rows.iter().all(|r| r.size == 1));
        let generic = Spectrum::from_members(p(1_000_003), [0, 1, 10, 1000, 77_777, -1, -10]);
        assert!(lambda_growth(&generic, 5, DEFAULT_WORK_CAP).unwrap().ok);
    }

    #[test]
    fn sumset_saturation() {
        let q = p(11);
        let half: Vec<u64> = (0..6).collect();
        assert_eq!(cyclic_sumset(&half, &half, q, 10).unwrap().len(), 11);
        assert_eq!(cyclic_sumset(&[1, 2], &[3], q, 10).unwrap(), vec![4, 5]);
    }
}
