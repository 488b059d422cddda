use std::cmp::Ordering;
use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::john::{discrete_john, DEFAULT_JOHN_CAP};
use super::{LatticeBasis, OpenBox, Relation};
use crate::error::{Error, Result};
use crate::gap::{Ambient, Gap, DEFAULT_VOLUME_CAP};

pub const DEFAULT_RELATION_CAP: u128 = 100_000_000;
pub const MAX_PROPERIZE_RANK: usize = 4;
pub const MAX_PROPERIZE_VOLUME: u128 = 100_000;
pub const TORSION_FACTOR: u128 = 1_000_000;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// `max_j |m_j| / N_j` as a fraction; coordinates with `N_j = 0` carry `m_j = 0`.
fn max_ratio(m: &[i64], n: &[u64]) -> (u64, u64) {
    let mut best = (0u64, 1u64);
    for (&x, &nj) in m.iter().zip(n) {
        if nj > 0 && (x.unsigned_abs() as u128) * (best.1 as u128) > (best.0 as u128) * (nj as u128) {
            best = (x.unsigned_abs(), nj);
        }
    }
    best
}

fn relation_order(a: &[i64], b: &[i64], n: &[u64]) -> Ordering {
    let (ra, rb) = (max_ratio(a, n), max_ratio(b, n));
    let ratio = ((ra.0 as u128) * (rb.1 as u128)).cmp(&((rb.0 as u128) * (ra.1 as u128)));
    let l1 = |m: &[i64]| m.iter().map(|x| x.unsigned_abs()).sum::<u64>();
    ratio.then(l1(a).cmp(&l1(b))).then(a.cmp(b))
}

/// Divides by the content and makes the first non-zero entry positive.
pub fn normalize_relation(m: &[i64]) -> Option<Relation> {
    let g = m.iter().fold(0u64, |g, &x| gcd(g, x.unsigned_abs()));
    if g == 0 {
        return None;
    }
    let sign = if m.iter().find(|&&x| x != 0).is_some_and(|&x| x < 0) { -1 } else { 1 };
    Some(Relation { m: m.iter().map(|&x| sign * x / g as i64).collect() })
}

fn enumerate_box(n: &[u64], mut visit: impl FnMut(&[i64])) {
    let mut m: Vec<i64> = n.iter().map(|&x| -(x as i64)).collect();
    loop {
        visit(&m);
        let mut j = 0;
        loop {
            if j == m.len() {
                return;
            }
            if m[j] < n[j] as i64 {
                m[j] += 1;
                break;
            }
            m[j] = -(n[j] as i64);
            j += 1;
        }
    }
}

/// Searches `[-N, N]^r` for a non-zero `m` with `m . v = 0` in the ambient group.
/// Among all relations the one minimizing `(max |m_j|/N_j, L1 norm, lex)` is
/// returned, after normalization.
pub fn find_relation(ambient: Ambient, v: &[i128], n: &[u64], cap: u128) -> Result<Option<Relation>> {
    if v.len() != n.len() || v.is_empty() {
        return Err(Error::Dimension("need one bound per vector".into()));
    }
    let vol = n.iter().fold(1u128, |a, &x| a.saturating_mul(2 * x as u128 + 1));
    if vol > cap {
        return Err(Error::resource("relation search box", vol, cap));
    }
    let h = v.len() / 2;
    let (vl, vr) = v.split_at(h);
    let (nl, nr) = n.split_at(h);
    let dot = |vs: &[i128], m: &[i64]| ambient.norm(vs.iter().zip(m).map(|(&a, &c)| ambient.mul(a, c as i128)).sum());

    let mut left: HashMap<i128, Vec<Vec<i64>>> = HashMap::new();
    if h == 0 {
        left.insert(0, vec![Vec::new()]);
    } else {
        enumerate_box(nl, |m| left.entry(dot(vl, m)).or_default().push(m.to_vec()));
    }
    let mut best: Option<Relation> = None;
    enumerate_box(nr, |mr| {
        let key = ambient.norm(-dot(vr, mr));
        if let Some(ls) = left.get(&key) {
            for ml in ls {
                let full: Vec<i64> = ml.iter().chain(mr).copied().collect();
                if let Some(rel) = normalize_relation(&full) {
                    if best.as_ref().is_none_or(|b| relation_order(&rel.m, &b.m, n) == Ordering::Less) {
                        best = Some(rel);
                    }
                }
            }
        }
    });
    Ok(best)
}

/// Unimodular `T` with `T G` in row echelon form; returns `(T, T G)`.
fn echelon_with_transform(g: &[Vec<i128>]) -> (Vec<Vec<i128>>, Vec<Vec<i128>>) {
    let rows = g.len();
    let cols = g.first().map_or(0, Vec::len);
    let mut a = g.to_vec();
    let mut t: Vec<Vec<i128>> = (0..rows).map(|i| (0..rows).map(|j| i128::from(i == j)).collect()).collect();
    let mut top = 0;
    for c in 0..cols {
        if top == rows {
            break;
        }
        loop {
            let piv = (top..rows).filter(|&r| a[r][c] != 0).min_by_key(|&r| a[r][c].abs());
            let Some(piv) = piv else { break };
            a.swap(top, piv);
            t.swap(top, piv);
            let mut done = true;
            for r in top + 1..rows {
                if a[r][c] != 0 {
                    let q = a[r][c].div_euclid(a[top][c]);
                    for j in 0..cols {
                        a[r][j] -= q * a[top][j];
                    }
                    for j in 0..rows {
                        t[r][j] -= q * t[top][j];
                    }
                    done &= a[r][c] == 0;
                }
            }
            if done {
                break;
            }
        }
        if a[top][c] != 0 {
            top += 1;
        }
    }
    (t, a)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DescentLevel {
    pub rank_in: usize,
    /// The relation in the level's own coordinate order.
    pub relation: Vec<i64>,
    /// Index of the coordinate maximizing `|m_j| / N_j`.
    pub pivot: usize,
    pub john_n: Vec<u64>,
    pub c: u64,
    pub gap_out: Gap,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProperizeReport {
    pub input: Gap,
    pub output: Gap,
    pub levels: Vec<DescentLevel>,
    pub input_size: u128,
    pub output_size: u128,
    pub size_ratio: f64,
}

fn check_hypotheses(p: &Gap) -> Result<()> {
    if !p.is_symmetric() {
        return Err(Error::precondition("properize needs a symmetric progression"));
    }
    if p.rank() > MAX_PROPERIZE_RANK {
        return Err(Error::resource("properize rank", p.rank() as u128, MAX_PROPERIZE_RANK as u128));
    }
    let vol = p.volume();
    if vol > MAX_PROPERIZE_VOLUME {
        return Err(Error::resource("properize volume", vol, MAX_PROPERIZE_VOLUME));
    }
    if let Some(m) = p.ambient.modulus() {
        if (m.value() as u128) <= TORSION_FACTOR * vol {
            return Err(Error::precondition(format!(
                "p = {} must exceed {} times the volume {vol}",
                m.value(),
                TORSION_FACTOR
            )));
        }
    }
    Ok(())
}

/// One step of the descent on an improper progression of rank `d >= 2` (after
/// dropping length-one coordinates). Returns a progression of rank `< d`
/// containing it.
fn descend(q: &Gap) -> Result<DescentLevel> {
    let k: Vec<u64> = q.half_widths().iter().map(|&x| x as u64).collect();
    let n: Vec<u64> = k.iter().map(|&x| 2 * x).collect();
    let d = q.rank();
    let m = find_relation(q.ambient, &q.basis, &n, DEFAULT_RELATION_CAP)?
        .expect("an improper progression has a relation in [-2K, 2K]");
    if d == 1 {
        return Err(Error::precondition(format!(
            "rank-one progression with relation {:?}: the ambient group has small torsion",
            m.m
        )));
    }
    // pivot: largest |m_j|/N_j, ties to the highest index
    let mut pivot = 0;
    for j in 1..d {
        let (a, b) = (m.m[j].unsigned_abs() as u128 * n[pivot] as u128, m.m[pivot].unsigned_abs() as u128 * n[j] as u128);
        if a >= b {
            pivot = j;
        }
    }
    let order: Vec<usize> = (0..d).filter(|&j| j != pivot).chain(std::iter::once(pivot)).collect();
    let sign = if m.m[pivot] < 0 { -1 } else { 1 };
    let mm: Vec<i128> = order.iter().map(|&j| (sign * m.m[j]) as i128).collect();
    let vv: Vec<i128> = order.iter().map(|&j| q.basis[j]).collect();
    let nn: Vec<u64> = order.iter().map(|&j| n[j]).collect();
    let md = mm[d - 1];

    // generators of m_d * Γ: m_d e_i and -m_{<d}
    let mut gen: Vec<Vec<i128>> = (0..d - 1).map(|i| (0..d - 1).map(|j| if i == j { md } else { 0 }).collect()).collect();
    gen.push(mm[..d - 1].iter().map(|&x| -x).collect());
    let (t, h) = echelon_with_transform(&gen);
    assert!(h[d - 1].iter().all(|&x| x == 0), "generators have rank d - 1");
    assert!(t[d - 1] == mm || t[d - 1].iter().zip(&mm).all(|(a, b)| *a == -b), "kernel of the generators is the relation");
    let f = |row: &[i128]| q.ambient.norm(row.iter().zip(&vv).map(|(&c, &v)| q.ambient.mul(c, v)).sum());
    assert_eq!(f(&t[d - 1]), 0, "f is well defined");
    let f_h: Vec<i128> = t[..d - 1].iter().map(|r| f(r)).collect();

    let hb = LatticeBasis::new(
        h[..d - 1].iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect(),
        BigInt::from(1),
    )?;
    let bx = OpenBox::new(nn[..d - 1].iter().map(|&x| BigRational::from_integer(BigInt::from(3 * x as i128 * md))).collect())?;
    let john = discrete_john(&bx, &hb, DEFAULT_JOHN_CAP)?;

    let mut basis = Vec::new();
    let mut lengths = Vec::new();
    for i in 0..d - 1 {
        let coords = hb.coordinates(&john.w.vector(i));
        let mut img = 0i128;
        for (c, &fv) in coords.iter().zip(&f_h) {
            let c = c.to_integer().to_i128().ok_or_else(|| Error::Overflow("john coordinate".into()))?;
            img = q.ambient.add(img, q.ambient.mul(c, fv));
        }
        if img != 0 {
            basis.push(img);
            lengths.push(2 * john.c * john.n[i] - 1);
        }
    }
    assert!(!basis.is_empty(), "a progression with a non-zero element cannot map to zero");
    let gap_out = Gap::symmetric(q.ambient, basis, lengths)?;
    Ok(DescentLevel { rank_in: d, relation: m.m, pivot, john_n: john.n, c: john.c, gap_out })
}

fn without_trivial_coordinates(g: &Gap) -> Gap {
    let keep: Vec<usize> = (0..g.rank()).filter(|&j| g.lengths[j] >= 3).collect();
    if keep.is_empty() || keep.len() == g.rank() {
        return g.clone();
    }
    Gap::symmetric(g.ambient, keep.iter().map(|&j| g.basis[j]).collect(), keep.iter().map(|&j| g.lengths[j]).collect())
        .expect("subset of a valid progression")
}

/// Replaces a symmetric progression by a proper one of no larger rank that
/// contains it, lowering the rank one relation at a time. Every level checks
/// containment by enumeration.
pub fn properize(p: &Gap) -> Result<ProperizeReport> {
    check_hypotheses(p)?;
    let input_enum = p.enumerate(DEFAULT_VOLUME_CAP)?;
    let mut levels = Vec::new();
    let mut cur = p.clone();
    let mut cur_enum = input_enum.clone();
    while cur_enum.collisions > 0 {
        let level = descend(&without_trivial_coordinates(&cur))?;
        let next_enum = level.gap_out.enumerate(DEFAULT_VOLUME_CAP)?;
        assert!(cur_enum.set.is_subset(&next_enum.set), "descent lost elements");
        cur = level.gap_out.clone();
        cur_enum = next_enum;
        levels.push(level);
    }
    assert!(input_enum.set.is_subset(&cur_enum.set));
    let input_size = input_enum.set.len() as u128;
    let output_size = cur_enum.set.len() as u128;
    Ok(ProperizeReport {
        input: p.clone(),
        output: cur,
        levels,
        input_size,
        output_size,
        size_ratio: output_size as f64 / input_size as f64,
    })
}
