//! Sumsets, doubling, Ruzsa's covering construction and a bounded-rank
//! progression fit for small sets.

use std::collections::HashSet;

use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::{Ambient, Gap, ZSet};
use crate::error::{Error, Result};
use crate::numeric::rising_binomial;

pub const DEFAULT_SUMSET_CAP: u128 = 100_000_000;
/// Sumsets whose value range fits in this many slots use a bitmap.
const DENSE_RANGE: u128 = 1 << 27;

pub fn sumset(a: &ZSet, b: &ZSet, cap: u128) -> Result<ZSet> {
    if a.ambient != b.ambient {
        return Err(Error::precondition("sumset of sets in different ambients"));
    }
    let amb = a.ambient;
    if a.is_empty() || b.is_empty() {
        return Ok(ZSet::new(amb, []));
    }
    if let Ambient::Fp(p) = amb {
        if (a.len() + b.len()) as u64 > p.value() {
            let half = (p.value() / 2) as i128;
            return Ok(ZSet::from_sorted(amb, (-half..=half).collect()));
        }
    }
    let work = a.len() as u128 * b.len() as u128;
    if work > cap {
        return Err(Error::resource("sumset work", work, cap));
    }
    let (lo, span) = match amb {
        Ambient::Z => {
            let lo = a.members()[0] + b.members()[0];
            let hi = a.members()[a.len() - 1] + b.members()[b.len() - 1];
            (lo, (hi - lo + 1) as u128)
        }
        Ambient::Fp(p) => {
            let half = (p.value() / 2) as i128;
            (-half, p.value() as u128)
        }
    };
    if span <= DENSE_RANGE {
        let mut mark = vec![0u64; span.div_ceil(64) as usize];
        for &x in a.members() {
            for &y in b.members() {
                let i = (amb.add(x, y) - lo) as usize;
                mark[i / 64] |= 1 << (i % 64);
            }
        }
        let mut out = Vec::new();
        for (w, &bits) in mark.iter().enumerate() {
            let mut bits = bits;
            while bits != 0 {
                let t = bits.trailing_zeros() as usize;
                out.push(lo + (w * 64 + t) as i128);
                bits &= bits - 1;
            }
        }
        Ok(ZSet::from_sorted(amb, out))
    } else {
        let mut seen: HashSet<i128> = HashSet::with_capacity(work.min(1 << 24) as usize);
        for &x in a.members() {
            for &y in b.members() {
                seen.insert(amb.add(x, y));
            }
        }
        let mut out: Vec<i128> = seen.into_iter().collect();
        out.sort_unstable();
        Ok(ZSet::from_sorted(amb, out))
    }
}

/// `kA = A + ... + A` (`k >= 1` copies).
pub fn iterated_sumset(a: &ZSet, k: u32, cap: u128) -> Result<ZSet> {
    Ok(sumset_chain(a, k, cap)?.pop().expect("k >= 1"))
}

/// `[A, 2A, ..., kA]`.
pub fn sumset_chain(a: &ZSet, k: u32, cap: u128) -> Result<Vec<ZSet>> {
    if k == 0 {
        return Err(Error::precondition("k must be at least 1"));
    }
    let mut out = vec![a.clone()];
    for _ in 1..k {
        let next = sumset(out.last().expect("non-empty"), a, cap)?;
        out.push(next);
    }
    Ok(out)
}

/// `|A + A| / |A|`.
pub fn doubling(a: &ZSet, cap: u128) -> Result<Ratio<u64>> {
    if a.is_empty() {
        return Err(Error::precondition("doubling of the empty set"));
    }
    let twice = sumset(a, a, cap)?;
    Ok(Ratio::new(twice.len() as u64, a.len() as u64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverCheck {
    pub k: u32,
    pub k_fold_size: u64,
    /// `kA ⊆ 2A + (k-2)X`
    pub covered: bool,
    /// `binom(C + k - 3, k - 2) C |A|`
    pub growth_bound: f64,
    pub growth_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuzsaReport {
    pub a_size: u64,
    pub four_a_size: u64,
    /// `C = |4A| / |A|`
    pub c: f64,
    pub x: ZSet,
    /// `|X| <= |4A| / |A|`, checked as `|X| |A| <= |4A|`.
    pub x_size_ok: bool,
    pub x_in_three_a: bool,
    pub checks: Vec<CoverCheck>,
    pub ok: bool,
}

/// Greedy maximal `X ⊆ 3A` whose translates `η + A` are pairwise disjoint,
/// then exact checks of `|X| <= |4A|/|A|`, `k'A ⊆ 2A + (k'-2)X` and the growth
/// bound for `4 <= k' <= k`.
pub fn ruzsa_cover(a: &ZSet, k: u32, cap: u128) -> Result<RuzsaReport> {
    if a.is_empty() || !a.is_symmetric() {
        return Err(Error::precondition("Ruzsa covering needs a non-empty symmetric set"));
    }
    let amb = a.ambient;
    let multiples = sumset_chain(a, k.max(4), cap)?;
    let (two_a, three_a, four_a) = (&multiples[1], &multiples[2], &multiples[3]);

    let mut covered: HashSet<i128> = HashSet::new();
    let mut chosen = Vec::new();
    for &eta in three_a.members() {
        if a.members().iter().all(|&x| !covered.contains(&amb.add(eta, x))) {
            covered.extend(a.members().iter().map(|&x| amb.add(eta, x)));
            chosen.push(eta);
        }
    }
    let x = ZSet::new(amb, chosen);
    let a_size = a.len() as u64;
    let four_a_size = four_a.len() as u64;
    let c = four_a_size as f64 / a_size as f64;
    let x_size_ok = x.len() as u64 * a_size <= four_a_size;
    let x_in_three_a = x.is_subset(three_a);

    let mut checks = Vec::new();
    let mut x_multiple = x.clone(); // (k' - 2) X, starting at k' = 3
    for kk in 3..=k {
        if kk > 3 {
            x_multiple = sumset(&x_multiple, &x, cap)?;
        }
        if kk < 4 {
            continue;
        }
        let cover = sumset(two_a, &x_multiple, cap)?;
        let k_fold = &multiples[kk as usize - 1];
        let growth_bound = rising_binomial(c, (kk - 2) as u64) * c * a_size as f64;
        checks.push(CoverCheck {
            k: kk,
            k_fold_size: k_fold.len() as u64,
            covered: k_fold.is_subset(&cover),
            growth_bound,
            growth_ok: k_fold.len() as f64 <= growth_bound * (1.0 + 1e-12),
        });
    }
    let ok = x_size_ok && x_in_three_a && checks.iter().all(|c| c.covered && c.growth_ok);
    Ok(RuzsaReport { a_size, four_a_size, c, x, x_size_ok, x_in_three_a, checks, ok })
}

pub const MAX_FIT_SET: usize = 1000;
const FIT_CANDIDATES: usize = 16;
const FIT_COEFF_BOUND: i64 = 1000;
const FIT_PROPER_TRIES: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum FitOutcome {
    Fit { gap: Gap, volume: u128 },
    Failure { reason: String },
}

impl FitOutcome {
    pub fn gap(&self) -> Option<&Gap> {
        match self {
            FitOutcome::Fit { gap, .. } => Some(gap),
            FitOutcome::Failure { .. } => None,
        }
    }
}

/// Searches for a proper symmetric progression of rank at most `r_max` (1 or 2)
/// containing `A`, with volume at most `volume_cap * |A|`.
///
/// Rank 1 uses the gcd of the elements. Rank 2 tries basis pairs among the 16
/// smallest positive differences of `A` and, per pair, the best coefficient box
/// for each bound on the second coefficient. Elements of `F_p` are lifted to
/// their centered representatives for the search; the result is verified in
/// the original ambient. A rank-2 fit is preferred only when strictly smaller.
pub fn freiman_fit(a: &ZSet, r_max: usize, volume_cap: u64) -> Result<FitOutcome> {
    if a.len() > MAX_FIT_SET {
        return Err(Error::resource("fit set size", a.len() as u128, MAX_FIT_SET as u128));
    }
    if a.is_empty() {
        return Ok(FitOutcome::Failure { reason: "empty set".into() });
    }
    let amb = a.ambient;
    let budget = volume_cap as u128 * a.len() as u128;
    let members = a.members();

    let mut best: Option<(u128, Gap)> = None;
    let g = members.iter().fold(0i128, |acc, &x| acc.gcd(&x));
    let (v, k) = if g == 0 { (1, 0) } else { (g, members.iter().map(|x| x.abs()).max().unwrap() / g) };
    let volume = (2 * k + 1) as u128;
    if volume <= budget {
        let gap = Gap::symmetric(amb, vec![v], vec![(2 * k + 1) as u64])?;
        if verify_fit(&gap, a)? {
            best = Some((volume, gap));
        }
    }

    if r_max >= 2 && members.len() >= 2 {
        let mut diffs: Vec<i128> = Vec::new();
        for (i, &x) in members.iter().enumerate() {
            for &y in &members[i + 1..] {
                diffs.push((y - x).abs());
            }
        }
        diffs.sort_unstable();
        diffs.dedup();
        diffs.retain(|&d| d > 0);
        diffs.truncate(FIT_CANDIDATES);
        let bound = (((budget.saturating_sub(1)) / 2).min(FIT_COEFF_BOUND as u128)) as i64;
        let mut candidates: Vec<(u128, i128, i128, i64, i64)> = Vec::new();
        for (i, &v1) in diffs.iter().enumerate() {
            for &v2 in &diffs[i + 1..] {
                rank_two_boxes(members, v1, v2, bound, budget, &mut candidates);
            }
        }
        candidates.sort_unstable();
        let limit = best.as_ref().map_or(u128::MAX, |b| b.0);
        for &(vol, v1, v2, k1, k2) in candidates.iter().take(FIT_PROPER_TRIES) {
            if vol >= limit {
                break;
            }
            let Ok(gap) = Gap::symmetric(amb, vec![v1, v2], vec![(2 * k1 + 1) as u64, (2 * k2 + 1) as u64]) else {
                continue;
            };
            if verify_fit(&gap, a)? {
                best = Some((vol, gap));
                break;
            }
        }
    }

    Ok(match best {
        Some((volume, gap)) => FitOutcome::Fit { gap, volume },
        None => FitOutcome::Failure {
            reason: format!("no proper progression of rank <= {r_max} and volume <= {budget} found"),
        },
    })
}

/// For basis `(v1, v2)`, every box `|m_1| <= K_1(K_2)`, `|m_2| <= K_2` that covers
/// all members, where `K_1(K_2)` is the least first-coefficient bound that works.
fn rank_two_boxes(
    members: &[i128],
    v1: i128,
    v2: i128,
    bound: i64,
    budget: u128,
    out: &mut Vec<(u128, i128, i128, i64, i64)>,
) {
    // best[i] = least |m_1| over representations of members[i] with |m_2| <= K_2
    let mut best: Vec<Option<i128>> = vec![None; members.len()];
    for k2 in 0..=bound {
        for (i, &x) in members.iter().enumerate() {
            for m2 in [k2, -k2] {
                let rest = x - m2 as i128 * v2;
                if rest % v1 == 0 {
                    let m1 = (rest / v1).abs();
                    if best[i].is_none_or(|b| m1 < b) {
                        best[i] = Some(m1);
                    }
                }
            }
        }
        if let Some(k1) = best.iter().try_fold(0i128, |acc, b| b.map(|b| acc.max(b))) {
            if k1 > FIT_COEFF_BOUND as i128 {
                continue;
            }
            let vol = (2 * k1 + 1) as u128 * (2 * k2 + 1) as u128;
            if vol <= budget {
                out.push((vol, v1, v2, k1 as i64, k2));
            } else if k1 == 0 {
                break;
            }
        }
    }
}

fn verify_fit(gap: &Gap, a: &ZSet) -> Result<bool> {
    let e = gap.enumerate(super::DEFAULT_VOLUME_CAP)?;
    Ok(e.collisions == 0 && a.is_subset(&e.set))
}
