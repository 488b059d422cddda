//! Exact lattice tools for turning an improper progression into a proper one:
//! reduced bases, a discrete John theorem for boxes, short relations, and the
//! rank-lowering descent.

pub mod john;
pub mod lll;
pub mod properize;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{det_bareiss, IntMatrix};
use crate::error::{Error, Result};
use crate::linalg;

pub use john::*;
pub use lll::*;
pub use properize::*;

/// The lattice generated by `rows / denom`, full rank in `d` dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeBasis {
    pub rows: Vec<Vec<BigInt>>,
    pub denom: BigInt,
}

impl LatticeBasis {
    pub fn new(rows: Vec<Vec<BigInt>>, denom: BigInt) -> Result<Self> {
        let d = rows.len();
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(Error::Dimension("a lattice basis must be d vectors of length d".into()));
        }
        if denom <= BigInt::zero() {
            return Err(Error::precondition("denominator must be positive"));
        }
        let b = LatticeBasis { rows, denom };
        if b.det_numerator()?.is_zero() {
            return Err(Error::precondition("basis vectors are linearly dependent"));
        }
        Ok(b)
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Result<Self> {
        LatticeBasis::new(linalg::to_big(rows), BigInt::one())
    }

    pub fn standard(d: usize) -> Self {
        let rows = (0..d)
            .map(|i| (0..d).map(|j| BigInt::from(u8::from(i == j))).collect())
            .collect();
        LatticeBasis { rows, denom: BigInt::one() }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    fn det_numerator(&self) -> Result<BigInt> {
        let d = self.dim();
        let m = IntMatrix::new(d, d, self.rows.iter().flatten().cloned().collect())?;
        det_bareiss(&m)
    }

    /// `|det(rows)| / denom^d`.
    pub fn covolume(&self) -> BigRational {
        let det = self.det_numerator().expect("square basis").abs();
        BigRational::new(det, num_traits::pow(self.denom.clone(), self.dim()))
    }

    pub fn vector(&self, i: usize) -> Vec<BigRational> {
        self.rows[i].iter().map(|x| BigRational::new(x.clone(), self.denom.clone())).collect()
    }

    /// Coordinates `c` with `v = sum_i c_i b_i`.
    pub fn coordinates(&self, v: &[BigRational]) -> Vec<BigRational> {
        let d = self.dim();
        // solve B^T c = v via the augmented system over Q
        let mut aug: Vec<Vec<BigRational>> = (0..d)
            .map(|k| {
                let mut row: Vec<BigRational> = (0..d).map(|i| BigRational::new(self.rows[i][k].clone(), self.denom.clone())).collect();
                row.push(v[k].clone());
                row
            })
            .collect();
        for c in 0..d {
            let piv = (c..d).find(|&r| !aug[r][c].is_zero()).expect("independent basis");
            aug.swap(c, piv);
            let inv = aug[c][c].recip();
            for x in aug[c].iter_mut() {
                *x = &*x * &inv;
            }
            for r in 0..d {
                if r != c && !aug[r][c].is_zero() {
                    let f = aug[r][c].clone();
                    for j in 0..=d {
                        let t = &f * &aug[c][j];
                        aug[r][j] -= t;
                    }
                }
            }
        }
        aug.into_iter().map(|r| r[d].clone()).collect()
    }

    pub fn contains(&self, v: &[BigRational]) -> bool {
        self.coordinates(v).iter().all(|c| c.is_integer())
    }

    /// Mutual membership of the two bases.
    pub fn same_lattice(&self, other: &LatticeBasis) -> bool {
        (0..other.dim()).all(|i| self.contains(&other.vector(i)))
            && (0..self.dim()).all(|i| other.contains(&self.vector(i)))
    }
}

/// The open box `{t : |t_j| < N_j}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpenBox {
    pub halfwidths: Vec<BigRational>,
}

impl OpenBox {
    pub fn new(halfwidths: Vec<BigRational>) -> Result<Self> {
        if halfwidths.is_empty() || halfwidths.iter().any(|h| !h.is_positive()) {
            return Err(Error::precondition("box halfwidths must be positive"));
        }
        Ok(OpenBox { halfwidths })
    }

    pub fn from_f64(h: &[f64]) -> Result<Self> {
        let hw = h
            .iter()
            .map(|&x| BigRational::from_float(x).ok_or_else(|| Error::precondition("halfwidth must be finite")))
            .collect::<Result<Vec<_>>>()?;
        OpenBox::new(hw)
    }

    pub fn contains(&self, t: &[BigRational]) -> bool {
        t.iter().zip(&self.halfwidths).all(|(x, h)| x.abs() < *h)
    }
}

/// An irreducible integer relation: non-zero, content 1, first non-zero entry positive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub m: Vec<i64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covolume_and_membership() {
        let b = LatticeBasis::from_i64(&[vec![2, 0], vec![1, 3]]).unwrap();
        assert_eq!(b.covolume(), BigRational::from_integer(6.into()));
        let v = |a: i64, c: i64| vec![BigRational::from_integer(a.into()), BigRational::from_integer(c.into())];
        assert!(b.contains(&v(3, 3)));
        assert!(!b.contains(&v(1, 0)));
        assert!(LatticeBasis::from_i64(&[vec![1, 2], vec![2, 4]]).is_err());
        let half = LatticeBasis::new(linalg::to_big(&[vec![1, 0], vec![0, 1]]), BigInt::from(2)).unwrap();
        assert_eq!(half.covolume(), BigRational::new(1.into(), 4.into()));
    }
}
