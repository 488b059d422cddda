//! Generalized arithmetic progressions over `Z` or `F_p`, and finite sets of
//! ambient elements.
//!
//! A progression of rank `r` is `{a + m_1 v_1 + ... + m_r v_r : -M_j/2 < m_j < M_j/2}`.
//! Elements of `F_p` are stored as centered representatives in `(-p/2, p/2]`.

pub mod structure;
pub mod sumset;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::arith::PrimeModulus;
use crate::error::{Error, Result};

pub use structure::*;
pub use sumset::*;

pub const DEFAULT_VOLUME_CAP: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ambient {
    Z,
    Fp(PrimeModulus),
}

impl Ambient {
    /// Canonical representative: identity over `Z`, centered residue over `F_p`.
    #[inline]
    pub fn norm(self, x: i128) -> i128 {
        match self {
            Ambient::Z => x,
            Ambient::Fp(p) => p.centered(x),
        }
    }

    pub fn add(self, x: i128, y: i128) -> i128 {
        self.norm(x + y)
    }

    pub fn mul(self, x: i128, y: i128) -> i128 {
        match self {
            Ambient::Z => x * y,
            Ambient::Fp(p) => p.centered(p.mul(p.reduce(x), p.reduce(y)) as i128),
        }
    }

    pub fn modulus(self) -> Option<PrimeModulus> {
        match self {
            Ambient::Z => None,
            Ambient::Fp(p) => Some(p),
        }
    }
}

/// A finite set of ambient elements, sorted and free of duplicates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZSet {
    pub ambient: Ambient,
    members: Vec<i128>,
}

impl ZSet {
    pub fn new(ambient: Ambient, members: impl IntoIterator<Item = i128>) -> Self {
        let mut m: Vec<i128> = members.into_iter().map(|x| ambient.norm(x)).collect();
        m.sort_unstable();
        m.dedup();
        ZSet { ambient, members: m }
    }

    /// Takes already-normalized, sorted, deduplicated members.
    pub(crate) fn from_sorted(ambient: Ambient, members: Vec<i128>) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        ZSet { ambient, members }
    }

    pub fn members(&self) -> &[i128] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, x: i128) -> bool {
        self.members.binary_search(&self.ambient.norm(x)).is_ok()
    }

    pub fn is_subset(&self, other: &ZSet) -> bool {
        self.members.iter().all(|&x| other.contains(x))
    }

    pub fn negated(&self) -> ZSet {
        ZSet::new(self.ambient, self.members.iter().map(|&x| -x))
    }

    pub fn is_symmetric(&self) -> bool {
        self.members.iter().all(|&x| self.contains(-x))
    }
}

/// Number of integers `m` with `-M/2 < m < M/2`, i.e. `|m| <= (M - 1) / 2`.
pub fn box_count(length: u64) -> u64 {
    2 * ((length - 1) / 2) + 1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gap {
    pub ambient: Ambient,
    pub offset: i128,
    pub basis: Vec<i128>,
    pub lengths: Vec<u64>,
}

impl Gap {
    pub fn new(ambient: Ambient, offset: i128, basis: Vec<i128>, lengths: Vec<u64>) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::Dimension("a progression needs rank at least 1".into()));
        }
        if basis.len() != lengths.len() {
            return Err(Error::Dimension(format!(
                "{} basis vectors but {} lengths",
                basis.len(),
                lengths.len()
            )));
        }
        let basis: Vec<i128> = basis.into_iter().map(|v| ambient.norm(v)).collect();
        if basis.contains(&0) {
            return Err(Error::precondition("basis vectors must be non-zero"));
        }
        if lengths.contains(&0) {
            return Err(Error::precondition("lengths must be positive"));
        }
        Ok(Gap { ambient, offset: ambient.norm(offset), basis, lengths })
    }

    pub fn symmetric(ambient: Ambient, basis: Vec<i128>, lengths: Vec<u64>) -> Result<Self> {
        Gap::new(ambient, 0, basis, lengths)
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.offset == 0
    }

    /// Largest admissible `|m_j|` per coordinate.
    pub fn half_widths(&self) -> Vec<i64> {
        self.lengths.iter().map(|&m| ((m - 1) / 2) as i64).collect()
    }

    /// Number of coefficient vectors in the box.
    pub fn volume(&self) -> u128 {
        self.lengths.iter().map(|&m| box_count(m) as u128).fold(1u128, |a, b| a.saturating_mul(b))
    }

    /// Product of the declared lengths `M_1 ... M_r`.
    pub fn length_product(&self) -> u128 {
        self.lengths.iter().map(|&m| m as u128).fold(1u128, |a, b| a.saturating_mul(b))
    }

    pub fn element(&self, m: &[i64]) -> i128 {
        let s: i128 = self.basis.iter().zip(m).map(|(&v, &c)| v * c as i128).sum::<i128>() + self.offset;
        self.ambient.norm(s)
    }

    fn check_volume(&self, cap: u128) -> Result<()> {
        let vol = self.volume();
        if vol > cap {
            return Err(Error::resource("progression volume", vol, cap));
        }
        Ok(())
    }

    /// Calls `visit` on every coefficient vector of the box, in odometer order
    /// starting from `(-K_1, ..., -K_r)`.
    pub fn for_each_coefficient(&self, mut visit: impl FnMut(&[i64])) {
        let k = self.half_widths();
        let mut m: Vec<i64> = k.iter().map(|&x| -x).collect();
        loop {
            visit(&m);
            let mut j = 0;
            loop {
                if j == m.len() {
                    return;
                }
                if m[j] < k[j] {
                    m[j] += 1;
                    break;
                }
                m[j] = -k[j];
                j += 1;
            }
        }
    }

    pub fn enumerate(&self, cap: u128) -> Result<Enumeration> {
        self.check_volume(cap)?;
        let mut table: HashMap<i128, Vec<i64>> = HashMap::new();
        let mut visited: u128 = 0;
        self.for_each_coefficient(|m| {
            visited += 1;
            let x = self.element(m);
            match table.get_mut(&x) {
                Some(best) => {
                    if coefficient_key(m, &self.lengths) < coefficient_key(best, &self.lengths) {
                        *best = m.to_vec();
                    }
                }
                None => {
                    table.insert(x, m.to_vec());
                }
            }
        });
        let set = ZSet::new(self.ambient, table.keys().copied());
        let collisions = visited - set.len() as u128;
        Ok(Enumeration { set, collisions, table })
    }

    pub fn is_proper(&self, cap: u128) -> Result<bool> {
        Ok(self.enumerate(cap)?.collisions == 0)
    }

    pub fn p_norm(&self, x: i128, cap: u128) -> Result<f64> {
        PNorm::new(self, cap)?.norm(x)
    }
}

/// Ordering used to pick one coefficient vector per element of an improper
/// progression: smallest `sum (m_i / M_i)^2`, then lexicographically smallest.
/// The first component is the norm scaled by `prod M_j^2`, exact in integers.
fn coefficient_key(m: &[i64], lengths: &[u64]) -> (u128, Vec<i64>) {
    let mut total: u128 = 0;
    for (i, &c) in m.iter().enumerate() {
        let others: u128 = lengths
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &l)| (l as u128) * (l as u128))
            .product();
        total += (c as i128 * c as i128) as u128 * others;
    }
    (total, m.to_vec())
}

#[derive(Debug, Clone)]
pub struct Enumeration {
    pub set: ZSet,
    /// `volume - |P|`; zero exactly when the progression is proper.
    pub collisions: u128,
    /// One coefficient vector per element (the unique one when proper).
    pub table: HashMap<i128, Vec<i64>>,
}

impl Enumeration {
    pub fn coefficients(&self, x: i128) -> Option<&[i64]> {
        self.table.get(&self.set.ambient.norm(x)).map(Vec::as_slice)
    }
}

/// `‖x‖_P = (sum (|m_i| / M_i)^2)^(1/2)` for a proper symmetric progression,
/// with coefficients recovered from an enumeration table.
pub struct PNorm<'a> {
    gap: &'a Gap,
    enumeration: Enumeration,
}

impl<'a> PNorm<'a> {
    pub fn new(gap: &'a Gap, cap: u128) -> Result<Self> {
        if !gap.is_symmetric() {
            return Err(Error::precondition("the P-norm needs a symmetric progression"));
        }
        let enumeration = gap.enumerate(cap)?;
        if enumeration.collisions != 0 {
            return Err(Error::precondition("the P-norm needs a proper progression"));
        }
        Ok(PNorm { gap, enumeration })
    }

    pub fn coefficients(&self, x: i128) -> Result<&[i64]> {
        self.enumeration
            .coefficients(x)
            .ok_or_else(|| Error::Membership(format!("{x} is not in the progression")))
    }

    pub fn norm_sq(&self, x: i128) -> Result<f64> {
        let m = self.coefficients(x)?;
        Ok(m.iter()
            .zip(&self.gap.lengths)
            .map(|(&c, &l)| {
                let t = c as f64 / l as f64;
                t * t
            })
            .sum())
    }

    pub fn norm(&self, x: i128) -> Result<f64> {
        Ok(self.norm_sq(x)?.sqrt())
    }

    pub fn enumeration(&self) -> &Enumeration {
        &self.enumeration
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn z(basis: &[i128], lengths: &[u64]) -> Gap {
        Gap::symmetric(Ambient::Z, basis.to_vec(), lengths.to_vec()).unwrap()
    }

    /// Pairwise comparison of all coefficient vectors.
    fn direct_collisions(g: &Gap) -> bool {
        let mut coeffs = Vec::new();
        g.for_each_coefficient(|m| coeffs.push(m.to_vec()));
        for i in 0..coeffs.len() {
            for j in i + 1..coeffs.len() {
                if g.element(&coeffs[i]) == g.element(&coeffs[j]) {
                    return true;
                }
            }
        }
        false
    }

    #[test]
    fn enumerate_examples() {
        let e = z(&[1], &[9]).enumerate(DEFAULT_VOLUME_CAP).unwrap();
        assert_eq!(e.set.members(), (-4..=4).collect::<Vec<i128>>().as_slice());
        assert_eq!(e.collisions, 0);
        let e = z(&[1, 3], &[3, 3]).enumerate(DEFAULT_VOLUME_CAP).unwrap();
        assert_eq!(e.set.len(), 9);
        assert_eq!(e.collisions, 0);
        let g = z(&[1, 2], &[5, 3]);
        let e = g.enumerate(DEFAULT_VOLUME_CAP).unwrap();
        assert_eq!((e.set.len(), e.collisions), (9, 6));
        assert!(!g.is_proper(DEFAULT_VOLUME_CAP).unwrap());
        assert!(z(&[1], &[20_000_001]).enumerate(DEFAULT_VOLUME_CAP).unwrap_err().is_resource());
    }

    #[test]
    fn even_lengths_drop_the_endpoint() {
        assert_eq!(box_count(4), 3);
        assert_eq!(box_count(5), 5);
        assert_eq!(box_count(1), 1);
        assert_eq!(z(&[1, 10], &[4, 4]).volume(), 9);
    }

    #[test]
    fn invalid_progressions() {
        assert!(Gap::symmetric(Ambient::Z, vec![], vec![]).is_err());
        assert!(Gap::symmetric(Ambient::Z, vec![0], vec![3]).is_err());
        let p = PrimeModulus::new(7).unwrap();
        assert!(Gap::symmetric(Ambient::Fp(p), vec![14], vec![3]).is_err());
    }

    #[test]
    fn p_norm_examples() {
        let g = z(&[1, 10], &[4, 4]);
        let pn = PNorm::new(&g, DEFAULT_VOLUME_CAP).unwrap();
        assert_eq!(pn.norm(0).unwrap(), 0.0);
        assert!((pn.norm(11).unwrap() - 2f64.sqrt() / 4.0).abs() < 1e-15);
        assert!(matches!(pn.norm(5), Err(Error::Membership(_))));
        for &x in pn.enumeration().set.members() {
            assert_eq!(pn.norm(x).unwrap(), pn.norm(-x).unwrap());
            assert!(pn.norm(x).unwrap() < (g.rank() as f64).sqrt() / 2.0);
        }
        assert!(PNorm::new(&z(&[1, 2], &[5, 3]), DEFAULT_VOLUME_CAP).is_err());
    }

    #[test]
    fn properness_matches_pairwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..300 {
            let r = rng.gen_range(1..=3);
            let basis: Vec<i128> = (0..r).map(|_| rng.gen_range(1..30) * if rng.gen() { 1 } else { -1 }).collect();
            let lengths: Vec<u64> = (0..r).map(|_| rng.gen_range(1..12)).collect();
            let amb = if rng.gen() { Ambient::Z } else { Ambient::Fp(PrimeModulus::new(101).unwrap()) };
            let Ok(g) = Gap::new(amb, rng.gen_range(-5..5), basis, lengths) else { continue };
            assert_eq!(g.is_proper(DEFAULT_VOLUME_CAP).unwrap(), !direct_collisions(&g), "{g:?}");
        }
    }

    #[test]
    fn finite_field_wraps() {
        let p = PrimeModulus::new(7).unwrap();
        let g = Gap::symmetric(Ambient::Fp(p), vec![1], vec![9]).unwrap();
        let e = g.enumerate(DEFAULT_VOLUME_CAP).unwrap();
        assert_eq!(e.set.len(), 7);
        assert_eq!(e.collisions, 2);
        assert_eq!(e.set.members(), &[-3, -2, -1, 0, 1, 2, 3]);
    }
}
