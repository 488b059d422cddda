//! Exact linear algebra over `Q` for small integer systems: reduced row echelon
//! form, rank, and integer bases of null spaces.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Reduced row echelon form of the rows. Returns the non-zero rows and their pivot columns.
pub fn rref(rows: &[Vec<BigInt>]) -> (Vec<Vec<BigRational>>, Vec<usize>) {
    let cols = rows.first().map_or(0, Vec::len);
    let mut m: Vec<Vec<BigRational>> = rows
        .iter()
        .map(|r| r.iter().map(|x| BigRational::from_integer(x.clone())).collect())
        .collect();
    let mut pivots = Vec::new();
    let mut rank = 0;
    for c in 0..cols {
        let Some(r) = (rank..m.len()).find(|&r| !m[r][c].is_zero()) else {
            continue;
        };
        m.swap(rank, r);
        let inv = m[rank][c].recip();
        for x in m[rank].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..m.len() {
            if i != rank && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let t = &f * &m[rank][j];
                    m[i][j] -= t;
                }
            }
        }
        pivots.push(c);
        rank += 1;
    }
    m.truncate(rank);
    (m, pivots)
}

pub fn rank(rows: &[Vec<BigInt>]) -> usize {
    rref(rows).1.len()
}

/// Primitive integer basis of `{x : rows * x = 0}`, one vector per free column,
/// each scaled so its first non-zero entry is positive.
pub fn integer_nullspace(rows: &[Vec<BigInt>], cols: usize) -> Vec<Vec<BigInt>> {
    let (m, pivots) = if rows.is_empty() { (Vec::new(), Vec::new()) } else { rref(rows) };
    let mut out = Vec::new();
    for free in (0..cols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![BigRational::zero(); cols];
        v[free] = BigRational::one();
        for (row, &pc) in m.iter().zip(&pivots) {
            v[pc] = -row[free].clone();
        }
        out.push(primitive(&v));
    }
    out
}

/// Clears denominators and divides by the content; the first non-zero entry becomes positive.
pub fn primitive(v: &[BigRational]) -> Vec<BigInt> {
    let lcm = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return ints;
    }
    let sign = match ints.iter().find(|x| !x.is_zero()) {
        Some(x) if x.is_negative() => -BigInt::one(),
        _ => BigInt::one(),
    };
    ints.into_iter().map(|x| x / &g * &sign).collect()
}

pub fn to_big(rows: &[Vec<i64>]) -> Vec<Vec<BigInt>> {
    rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn nullspace_is_orthogonal_and_complementary() {
        let rows = to_big(&[vec![1, 2, 3, 4], vec![2, 4, 6, 9]]);
        assert_eq!(rank(&rows), 2);
        let ns = integer_nullspace(&rows, 4);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            for r in &rows {
                assert!(dot(r, v).is_zero());
            }
        }
        let mut all = rows.clone();
        all.extend(ns);
        assert_eq!(rank(&all), 4);
    }

    #[test]
    fn primitive_vector() {
        let v: Vec<BigRational> = [(-2, 3), (4, 3), (0, 1)]
            .iter()
            .map(|&(a, b)| BigRational::new(a.into(), b.into()))
            .collect();
        assert_eq!(primitive(&v), to_big(&[vec![1, -2, 0]])[0]);
    }
}
