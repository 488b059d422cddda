//! Rank reduction, rational commensurability and the structure certificate for
//! a normal vector, plus the end-to-end scan that produces one.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::{Ambient, FitOutcome, Gap, ZSet, DEFAULT_VOLUME_CAP};
use crate::error::{Error, Result};
use crate::fourier::{
    bohr_set, classify_exceptional, fourier_prime, spectrum, ExceptionalLabel, ParamChain, DEFAULT_BOHR_SCAN_CAP,
    DEFAULT_BOHR_THRESHOLD,
};
use crate::hyperplane::{comb_dimension, CombDim, NormalVector};
use crate::lattice::properize;
use crate::linalg;

pub const MAX_SCAN_N: usize = 12;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionStep {
    pub alpha: Vec<i64>,
    /// Coordinate removed from the progression of this step.
    pub index: usize,
    pub w: i128,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankReduction {
    pub gap: Gap,
    pub steps: Vec<ReductionStep>,
    /// Rank of the coefficient matrix of `U` in the input progression.
    pub coefficient_rank: usize,
}

fn coefficient_matrix(p: &Gap, u: &ZSet) -> Result<Vec<Vec<i64>>> {
    let e = p.enumerate(DEFAULT_VOLUME_CAP)?;
    u.members()
        .iter()
        .map(|&x| {
            e.coefficients(x)
                .map(<[i64]>::to_vec)
                .ok_or_else(|| Error::Membership(format!("{x} is not in the progression")))
        })
        .collect()
}

fn check_contains(p: &Gap, u: &ZSet) -> Result<()> {
    let e = p.enumerate(DEFAULT_VOLUME_CAP)?;
    match u.members().iter().find(|&&x| !e.set.contains(x)) {
        Some(x) => Err(Error::Membership(format!("{x} is not in the progression"))),
        None => Ok(()),
    }
}

/// Lowers the rank of `P` while the coefficient vectors of `U` satisfy an
/// integer relation `alpha`: with `w = v_j / alpha_j`, every `v_i` becomes
/// `v_i - alpha_i w`, coordinate `j` vanishes, and `U` stays inside.
///
/// `j` is the largest index whose `alpha_j` is invertible mod `p` (over `Z`,
/// the largest index with `alpha_j | v_j`).
pub fn rank_reduce(p: &Gap, u: &ZSet) -> Result<RankReduction> {
    if u.ambient != p.ambient {
        return Err(Error::precondition("set and progression live in different groups"));
    }
    let mut coeffs = coefficient_matrix(p, u)?;
    let coefficient_rank = linalg::rank(&linalg::to_big(&coeffs));
    let mut gap = p.clone();
    let mut steps = Vec::new();
    let amb = p.ambient;
    while gap.rank() > 1 {
        let r = gap.rank();
        let kernel = if coeffs.is_empty() {
            vec![(0..r).map(|i| BigInt::from(u8::from(i == 0))).collect()]
        } else {
            linalg::integer_nullspace(&linalg::to_big(&coeffs), r)
        };
        let Some(alpha) = kernel.first() else { break };
        let alpha: Vec<i64> = alpha
            .iter()
            .map(|x| x.to_i64().ok_or_else(|| Error::Overflow("relation entry".into())))
            .collect::<Result<_>>()?;
        let usable = |j: usize| match amb {
            Ambient::Fp(m) => m.reduce(alpha[j] as i128) != 0,
            Ambient::Z => alpha[j] != 0 && gap.basis[j] % alpha[j] as i128 == 0,
        };
        let j = (0..r).rev().find(|&j| usable(j)).ok_or_else(|| {
            Error::precondition(format!("no coordinate of the relation {alpha:?} can be divided out"))
        })?;
        let w = match amb {
            Ambient::Fp(m) => {
                let inv = m.inv(m.reduce(alpha[j] as i128)).expect("non-zero residue");
                amb.mul(gap.basis[j], inv as i128)
            }
            Ambient::Z => gap.basis[j] / alpha[j] as i128,
        };
        let mut basis = Vec::with_capacity(r - 1);
        let mut lengths = Vec::with_capacity(r - 1);
        let mut keep = Vec::with_capacity(r - 1);
        for i in (0..r).filter(|&i| i != j) {
            let vi = amb.add(gap.basis[i], -amb.mul(alpha[i] as i128, w));
            if vi != 0 {
                basis.push(vi);
                lengths.push(gap.lengths[i]);
                keep.push(i);
            }
        }
        if basis.is_empty() {
            // every element of U is zero; the rank-one progression {0} on v_j is kept
            break;
        }
        gap = Gap::symmetric(amb, basis, lengths)?;
        for row in coeffs.iter_mut() {
            *row = keep.iter().map(|&i| row[i]).collect();
        }
        check_contains(&gap, u)?;
        steps.push(ReductionStep { alpha, index: j, w });
        if coeffs.is_empty() || linalg::rank(&linalg::to_big(&coeffs)) == gap.rank() {
            break;
        }
    }
    Ok(RankReduction { gap, steps, coefficient_rank })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommensurabilityReport {
    pub bound: u64,
    pub v1: i128,
    /// `(p', q')` with `u q' = p' v1`, per member of `U` in order.
    pub witnesses: Vec<Option<(i64, i64)>>,
    pub failing: Vec<i128>,
    pub ok: bool,
}

/// For each `u` in `U` finds `|p'|, |q'| <= bound`, `q' > 0`, with
/// `u q' = p' v1`, taking the smallest `q'`.
pub fn commensurability_check(u: &ZSet, v1: i128, bound: u64) -> Result<CommensurabilityReport> {
    let amb = u.ambient;
    let v1 = amb.norm(v1);
    if v1 == 0 {
        return Err(Error::precondition("v1 must be non-zero"));
    }
    let inv = match amb {
        Ambient::Fp(m) => Some(m.inv(m.reduce(v1)).expect("non-zero residue") as i128),
        Ambient::Z => None,
    };
    let mut witnesses = Vec::with_capacity(u.len());
    let mut failing = Vec::new();
    for &x in u.members() {
        let mut found = None;
        for q in 1..=bound as i128 {
            let uq = amb.mul(x, q);
            let p = match inv {
                Some(i) => Some(amb.mul(uq, i)),
                None => (uq % v1 == 0).then(|| uq / v1),
            };
            if let Some(p) = p.filter(|p| p.unsigned_abs() <= bound as u128) {
                found = Some((p as i64, q as i64));
                break;
            }
        }
        if found.is_none() {
            failing.push(x);
        }
        witnesses.push(found);
    }
    Ok(CommensurabilityReport { bound, v1, ok: failing.is_empty(), witnesses, failing })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianCountReport {
    pub n: usize,
    pub lengths: Vec<u64>,
    /// `ln prod_j (1 + M_j / sqrt n)^n`.
    pub log_product_form: f64,
    /// `ln (1 + M_1...M_r / sqrt n)^n`.
    pub log_comparison_form: f64,
    /// `ln (n^(-n/2) 2^(n (n - d_pm)))`.
    pub log_target: f64,
    pub product_form: f64,
    pub comparison_form: f64,
    pub target: f64,
}

/// Evaluates the Gaussian counting chain for a progression in log space.
pub fn gaussian_count_bound(n: usize, d_pm: f64, lengths: &[u64]) -> Result<GaussianCountReport> {
    if n == 0 {
        return Err(Error::Dimension("n must be positive".into()));
    }
    let nf = n as f64;
    let rt = nf.sqrt();
    let log_product_form = nf * lengths.iter().map(|&m| (m as f64 / rt).ln_1p()).sum::<f64>();
    let log_vol: f64 = lengths.iter().map(|&m| (m as f64).ln()).sum();
    // ln(1 + e^(log_vol - ln sqrt n)) without overflow
    let t = log_vol - rt.ln();
    let log1pexp = if t > 30.0 { t + (-t).exp().ln_1p() } else { t.exp().ln_1p() };
    let log_comparison_form = nf * log1pexp;
    let log_target = -nf / 2.0 * nf.ln() + nf * (nf - d_pm) * std::f64::consts::LN_2;
    Ok(GaussianCountReport {
        n,
        lengths: lengths.to_vec(),
        log_product_form,
        log_comparison_form,
        log_target,
        product_form: log_product_form.exp(),
        comparison_form: log_comparison_form.exp(),
        target: log_target.exp(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate {
    pub gap: Gap,
    pub pnorm_sum: f64,
    pub commensurability_bound: u64,
    /// `M_1...M_r / 2^(n - d_pm)`.
    pub volume_ratio: f64,
}

fn ambient_set(amb: Ambient, a: &NormalVector) -> ZSet {
    ZSet::new(amb, a.coeffs().iter().map(|&x| x as i128))
}

fn pnorm_sum(gap: &Gap, a: &NormalVector) -> Result<f64> {
    let pn = super::PNorm::new(gap, DEFAULT_VOLUME_CAP)?;
    a.coeffs().iter().map(|&x| pn.norm_sq(x as i128)).sum()
}

impl Certificate {
    /// Measures the certificate quantities of `gap` for `a`.
    pub fn measure(a: &NormalVector, gap: Gap, comb: &CombDim, commensurability_bound: u64) -> Result<Self> {
        let pnorm_sum = pnorm_sum(&gap, a)?;
        let volume_ratio = gap.length_product() as f64 / 2f64.powf(a.n() as f64 - comb.d_pm());
        Ok(Certificate { gap, pnorm_sum, commensurability_bound, volume_ratio })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateReport {
    pub c: f64,
    pub rank: usize,
    pub rank_ok: bool,
    pub volume_ratio: f64,
    pub volume_ok: bool,
    pub missing: Vec<i64>,
    pub contains_all: bool,
    pub pnorm_sum: Option<f64>,
    pub pnorm_ok: bool,
    pub commensurability: CommensurabilityReport,
    pub commensurable: bool,
    /// The certificate's stated values agree with the measured ones.
    pub stated_values_match: bool,
    pub passed: bool,
}

/// Checks each clause of the structure conclusion for `a` against `C`.
pub fn structure_certificate_check(a: &NormalVector, cert: &Certificate, c: f64) -> Result<CertificateReport> {
    let gap = &cert.gap;
    if !gap.is_symmetric() {
        return Err(Error::precondition("certificate progression must be symmetric"));
    }
    if !gap.is_proper(DEFAULT_VOLUME_CAP)? {
        return Err(Error::precondition("certificate progression must be proper"));
    }
    let comb = comb_dimension(a)?;
    let e = gap.enumerate(DEFAULT_VOLUME_CAP)?;
    let missing: Vec<i64> = a.coeffs().iter().copied().filter(|&x| !e.set.contains(x as i128)).collect();
    let contains_all = missing.is_empty();
    let pnorm_sum = if contains_all { Some(pnorm_sum(gap, a)?) } else { None };
    let volume_ratio = gap.length_product() as f64 / 2f64.powf(a.n() as f64 - comb.d_pm());
    let commensurability = commensurability_check(&ambient_set(gap.ambient, a), gap.basis[0], cert.commensurability_bound)?;
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1.0);
    let stated_values_match =
        close(cert.volume_ratio, volume_ratio) && pnorm_sum.is_none_or(|s| close(cert.pnorm_sum, s));
    let rank_ok = gap.rank() as f64 <= c;
    let volume_ok = volume_ratio <= c;
    let pnorm_ok = pnorm_sum.is_some_and(|s| s <= c);
    let commensurable = commensurability.ok;
    Ok(CertificateReport {
        c,
        rank: gap.rank(),
        rank_ok,
        volume_ratio,
        volume_ok,
        missing,
        contains_all,
        pnorm_sum,
        pnorm_ok,
        commensurable,
        commensurability,
        stated_values_match,
        passed: rank_ok && volume_ok && contains_all && pnorm_ok && commensurable,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanParams {
    pub chain: ParamChain,
    pub bohr_threshold: f64,
    pub fit_rank: usize,
    /// Fits may use up to this many coefficient vectors per element of `A`.
    pub fit_volume_cap: u64,
    pub c: f64,
    /// Defaults to `n^2`.
    pub commensurability_bound: Option<u64>,
}

impl Default for ScanParams {
    fn default() -> Self {
        ScanParams {
            chain: ParamChain::default(),
            bohr_threshold: DEFAULT_BOHR_THRESHOLD,
            fit_rank: 2,
            fit_volume_cap: 16,
            c: 10.0,
            commensurability_bound: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub ok: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StructureScan {
    pub n: usize,
    pub p: Option<u64>,
    pub prime_note: Option<String>,
    pub comb: Option<CombDim>,
    pub label: Option<ExceptionalLabel>,
    pub spectrum_size: Option<usize>,
    pub bohr_set: Option<Vec<i64>>,
    /// Number of `a_i` outside the Bohr set.
    pub outside_bohr: Option<usize>,
    pub fit: Option<FitOutcome>,
    pub extended: Option<Gap>,
    pub properized: Option<Gap>,
    pub properize_ratio: Option<f64>,
    pub reduced: Option<RankReduction>,
    pub certificate: Option<Certificate>,
    pub check: Option<CertificateReport>,
    pub stages: Vec<StageRecord>,
    /// The stage at which the pipeline stopped, if it did not reach the end.
    pub stopped_at: Option<String>,
}

impl StructureScan {
    fn record<T>(&mut self, stage: &str, r: Result<T>, detail: impl FnOnce(&T) -> String) -> Option<T> {
        match r {
            Ok(v) => {
                self.stages.push(StageRecord { stage: stage.into(), ok: true, detail: detail(&v) });
                Some(v)
            }
            Err(e) => {
                self.stages.push(StageRecord { stage: stage.into(), ok: false, detail: e.to_string() });
                self.stopped_at = Some(stage.into());
                None
            }
        }
    }

    fn stop(&mut self, stage: &str, detail: String) {
        self.stages.push(StageRecord { stage: stage.into(), ok: false, detail });
        self.stopped_at = Some(stage.into());
    }
}

/// Runs the whole pipeline for `a`: exceptionality, spectrum, Bohr set, fit,
/// extension by the `a_i` outside the fit, properization, rank reduction and
/// the certificate. Stage failures are recorded in the report.
pub fn structure_scan(a: &NormalVector, params: &ScanParams) -> Result<StructureScan> {
    let n = a.n();
    if n > MAX_SCAN_N {
        return Err(Error::resource("structure scan n", n as u128, MAX_SCAN_N as u128));
    }
    params.chain.validate()?;
    let mut s = StructureScan { n, ..Default::default() };

    let Some(comb) = s.record("comb_dimension", comb_dimension(a), |c| format!("d_pm = {}/{}", c.d_pm_num, c.d_pm_den))
    else {
        return Ok(s);
    };
    s.comb = Some(comb.clone());
    let Some((p, note)) = s.record("prime", fourier_prime(a), |(p, _)| format!("p = {}", p.value())) else {
        return Ok(s);
    };
    s.p = Some(p.value());
    s.prime_note = note;
    let Some(label) = s.record("classify", classify_exceptional(a, p, &params.chain), |l| {
        if l.exceptional { "exceptional".into() } else { "unexceptional".into() }
    }) else {
        return Ok(s);
    };
    let exceptional = label.exceptional;
    s.label = Some(label);
    if !exceptional {
        s.stopped_at = Some("classify".into());
        return Ok(s);
    }

    let Some(spec) = s.record("spectrum", spectrum(a, p, params.chain.eps2), |sp| format!("|Λ| = {}", sp.len())) else {
        return Ok(s);
    };
    s.spectrum_size = Some(spec.len());
    let bohr = bohr_set(&spec, params.bohr_threshold, DEFAULT_BOHR_SCAN_CAP, Some(&comb));
    let Some(bohr) = s.record("bohr_set", bohr, |b| format!("|A| = {}", b.members.len())) else {
        return Ok(s);
    };
    let amb = Ambient::Fp(p);
    let aset = ZSet::new(amb, bohr.members.iter().map(|&x| x as i128));
    let outside = a.coeffs().iter().filter(|&&x| !aset.contains(amb.norm(x as i128))).count();
    s.outside_bohr = Some(outside);
    s.bohr_set = Some(bohr.members);

    let fit = crate::gap::freiman_fit(&aset, params.fit_rank, params.fit_volume_cap);
    let Some(fit) = s.record("fit", fit, |f| match f {
        FitOutcome::Fit { gap, volume } => format!("rank {} volume {volume}", gap.rank()),
        FitOutcome::Failure { reason } => reason.clone(),
    }) else {
        return Ok(s);
    };
    s.fit = Some(fit.clone());
    let FitOutcome::Fit { gap: fitted, .. } = fit else {
        s.stop("fit", "no progression found".into());
        return Ok(s);
    };

    // each a_i outside the fit becomes a new direction of length 3
    let mut basis = fitted.basis.clone();
    let mut lengths = fitted.lengths.clone();
    let covered = fitted.enumerate(DEFAULT_VOLUME_CAP);
    let Some(covered) = s.record("extend", covered, |_| String::new()) else {
        return Ok(s);
    };
    for &x in a.coeffs() {
        let x = amb.norm(x as i128);
        if x != 0 && !covered.set.contains(x) && !basis[fitted.rank()..].iter().any(|&b| b == x || b == amb.norm(-x)) {
            basis.push(x);
            lengths.push(3);
        }
    }
    let extended = Gap::symmetric(amb, basis, lengths);
    let Some(extended) = s.record("extend", extended, |g| format!("rank {}", g.rank())) else {
        return Ok(s);
    };
    s.extended = Some(extended.clone());

    let proper = match extended.is_proper(DEFAULT_VOLUME_CAP) {
        Ok(true) => {
            s.stages.push(StageRecord { stage: "properize".into(), ok: true, detail: "already proper".into() });
            s.properize_ratio = Some(1.0);
            extended
        }
        Ok(false) => {
            let r = properize(&extended);
            let Some(r) = s.record("properize", r, |r| format!("|Q|/|P| = {}", r.size_ratio)) else {
                return Ok(s);
            };
            s.properize_ratio = Some(r.size_ratio);
            r.output
        }
        Err(e) => {
            s.stop("properize", e.to_string());
            return Ok(s);
        }
    };
    s.properized = Some(proper.clone());

    let u = ambient_set(amb, a);
    let Some(red) = s.record("rank_reduce", rank_reduce(&proper, &u), |r| {
        format!("coefficient rank {}, {} reductions", r.coefficient_rank, r.steps.len())
    }) else {
        return Ok(s);
    };
    let final_gap = red.gap.clone();
    s.reduced = Some(red);

    let bound = params.commensurability_bound.unwrap_or((n * n) as u64);
    let Some(cert) = s.record("certificate", Certificate::measure(a, final_gap, &comb, bound), |c| {
        format!("volume ratio {}, pnorm sum {}", c.volume_ratio, c.pnorm_sum)
    }) else {
        return Ok(s);
    };
    let check = structure_certificate_check(a, &cert, params.c);
    s.certificate = Some(cert);
    let Some(check) = s.record("check", check, |c| if c.passed { "passed".into() } else { "failed".into() }) else {
        return Ok(s);
    };
    s.check = Some(check);
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::PrimeModulus;

    fn fp() -> Ambient {
        Ambient::Fp(PrimeModulus::above(1_000_003).unwrap())
    }

    #[test]
    fn full_rank_coefficients_leave_progression_unchanged() {
        let p = Gap::symmetric(fp(), vec![1, 100], vec![5, 5]).unwrap();
        let u = ZSet::new(fp(), [1, 100, 101]);
        let r = rank_reduce(&p, &u).unwrap();
        assert_eq!(r.gap, p);
        assert!(r.steps.is_empty());
        assert_eq!(r.coefficient_rank, 2);
    }

    #[test]
    fn reduction_along_a_line() {
        let p = Gap::symmetric(fp(), vec![3, 5], vec![9, 9]).unwrap();
        let u = ZSet::new(fp(), (-2..=2).map(|m| 8 * m));
        let r = rank_reduce(&p, &u).unwrap();
        assert_eq!(r.steps.len(), 1);
        assert_eq!(r.steps[0].alpha, vec![1, -1]);
        assert_eq!(r.steps[0].w, -5);
        assert_eq!(r.gap.basis, vec![8]);
        assert_eq!(r.gap.lengths, vec![9]);
        assert!(u.is_subset(&r.gap.enumerate(DEFAULT_VOLUME_CAP).unwrap().set));
        assert!(r.gap.volume() <= p.volume());
    }

    #[test]
    fn chained_reduction() {
        let p = Gap::symmetric(fp(), vec![1, 1000, 1_000_000], vec![5, 5, 5]).unwrap();
        let u = ZSet::new(fp(), (-2..=2).map(|m| m * (1 + 1000 + 1_000_000)));
        let r = rank_reduce(&p, &u).unwrap();
        assert_eq!(r.coefficient_rank, 1);
        assert_eq!(r.steps.len(), 2);
        assert_eq!(r.gap.rank(), 1);
        assert!(u.is_subset(&r.gap.enumerate(DEFAULT_VOLUME_CAP).unwrap().set));
    }

    #[test]
    fn reduction_rejects_outside_points() {
        let p = Gap::symmetric(fp(), vec![1], vec![3]).unwrap();
        assert!(matches!(rank_reduce(&p, &ZSet::new(fp(), [5])), Err(Error::Membership(_))));
    }

    #[test]
    fn commensurability_examples() {
        let f = fp();
        let m = f.modulus().unwrap();
        let v1 = 12345;
        let r = commensurability_check(&ZSet::new(f, [v1, 2 * v1, 3 * v1]), v1, 3).unwrap();
        assert!(r.ok);
        let mut w = r.witnesses.clone();
        w.sort();
        assert_eq!(w, vec![Some((1, 1)), Some((2, 1)), Some((3, 1))]);

        let third = m.inv(3).unwrap() as i128;
        let u = f.mul(f.mul(v1, 5), third);
        let r = commensurability_check(&ZSet::new(f, [u]), v1, 5).unwrap();
        assert_eq!(r.witnesses, vec![Some((5, 3))]);

        let r = commensurability_check(&ZSet::new(f, [424_242]), 1, 10).unwrap();
        // exhaustive oracle over the 21 x 10 pairs
        let hit = (1..=10i128).any(|q| (-10..=10i128).any(|p| f.norm(424_242 * q - p) == 0));
        assert_eq!(r.ok, hit);
        assert!(!r.ok);
        assert_eq!(r.failing, vec![424_242]);
        assert!(commensurability_check(&ZSet::new(f, [1]), 0, 3).is_err());
    }

    #[test]
    fn gaussian_chain_values() {
        for n in [1usize, 4, 25, 100] {
            let r = gaussian_count_bound(n, 1.0, &[1]).unwrap();
            assert!(r.log_product_form <= (n as f64).sqrt() + 1e-12);
        }
        let r = gaussian_count_bound(16, 2.0, &[2, 3]).unwrap();
        let direct = 16.0 * ((1.0f64 + 0.5).ln() + (1.0f64 + 0.75).ln());
        assert!((r.log_product_form - direct).abs() < 1e-12);
        assert!((r.product_form - 1.5f64.powi(16) * 1.75f64.powi(16)).abs() / r.product_form < 1e-12);
        let r = gaussian_count_bound(64, 2.0, &[8]).unwrap();
        assert!((r.log_comparison_form - 64.0 * 2f64.ln()).abs() < 1e-9);
        let big = gaussian_count_bound(10, 1.0, &[u64::MAX, u64::MAX, u64::MAX]).unwrap();
        assert!(big.log_comparison_form.is_finite());
    }

    #[test]
    fn certificate_for_all_ones() {
        let a = NormalVector::new(vec![1; 6]).unwrap();
        let comb = comb_dimension(&a).unwrap();
        let gap = Gap::symmetric(Ambient::Z, vec![1], vec![3]).unwrap();
        let cert = Certificate::measure(&a, gap.clone(), &comb, 36).unwrap();
        assert!((cert.pnorm_sum - 2.0 / 3.0).abs() < 1e-12);
        let r = structure_certificate_check(&a, &cert, 10.0).unwrap();
        assert!(r.passed && r.rank_ok && r.contains_all && r.stated_values_match);

        let b = NormalVector::new(vec![1, 1, 1, 1, 2, 2]).unwrap();
        let cert = Certificate { gap: gap.clone(), pnorm_sum: 0.0, commensurability_bound: 36, volume_ratio: 0.0 };
        let r = structure_certificate_check(&b, &cert, 10.0).unwrap();
        assert!(!r.contains_all && !r.passed);
        assert_eq!(r.missing, vec![2, 2]);

        let r = structure_certificate_check(&a, &Certificate::measure(&a, gap, &comb, 36).unwrap(), 1e-6).unwrap();
        assert!(!r.volume_ok && !r.passed);

        let improper = Gap::symmetric(Ambient::Z, vec![1, 1], vec![3, 3]).unwrap();
        let bad = Certificate { gap: improper, pnorm_sum: 0.0, commensurability_bound: 1, volume_ratio: 0.0 };
        assert!(matches!(structure_certificate_check(&a, &bad, 10.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn scan_all_ones() {
        let a = NormalVector::new(vec![1; 4]).unwrap();
        let s = structure_scan(&a, &ScanParams::default()).unwrap();
        assert!(s.label.as_ref().unwrap().exceptional, "{:?}", s.stages);
        assert!(s.bohr_set.as_ref().unwrap().contains(&0));
        assert!(s.stopped_at.is_none(), "{:?}", s.stages);
        let cert = s.certificate.unwrap();
        assert_eq!(cert.gap.basis, vec![1]);
        assert_eq!(cert.gap.lengths, vec![3]);
        assert!((cert.pnorm_sum - 4.0 / 9.0).abs() < 1e-12);
        assert!(s.check.unwrap().passed);
    }

    #[test]
    fn scan_reports_undefined_dimension() {
        let a = NormalVector::new(vec![1, 2, 4]).unwrap();
        let s = structure_scan(&a, &ScanParams::default()).unwrap();
        assert_eq!(s.stopped_at.as_deref(), Some("comb_dimension"));
        assert!(!s.stages[0].ok);
    }
}
