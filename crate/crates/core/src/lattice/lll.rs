use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::LatticeBasis;
use crate::arith::{det_bareiss, IntMatrix};
use crate::error::{Error, Result};

pub const MAX_REDUCE_DIM: usize = 8;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReducedBasis {
    pub basis: LatticeBasis,
    /// Unimodular change of basis: `basis.rows = transform * input.rows`.
    pub transform: Vec<Vec<BigInt>>,
    /// `prod |w_i| / covolume` under the weighted norm.
    pub product_ratio: f64,
    /// Whether `prod |w_i|^2 <= 4^(d^2) covolume^2` holds exactly.
    pub within_bound: bool,
}

fn dot(a: &[BigInt], b: &[BigInt], weights: &[BigRational]) -> BigRational {
    let mut s = BigRational::zero();
    for ((x, y), w) in a.iter().zip(b).zip(weights) {
        s += w * BigRational::from_integer(x * y);
    }
    s
}

fn round_rational(x: &BigRational) -> BigInt {
    // half away from zero
    let two = BigInt::from(2);
    let n = x.numer() * &two + if x.is_negative() { -x.denom() } else { x.denom().clone() };
    n / (x.denom() * &two)
}

struct GramSchmidt {
    mu: Vec<Vec<BigRational>>,
    norms: Vec<BigRational>,
}

fn gram_schmidt(rows: &[Vec<BigInt>], weights: &[BigRational]) -> GramSchmidt {
    let d = rows.len();
    let mut star: Vec<Vec<BigRational>> = Vec::with_capacity(d);
    let mut mu = vec![vec![BigRational::zero(); d]; d];
    let mut norms = Vec::with_capacity(d);
    for i in 0..d {
        let mut v: Vec<BigRational> = rows[i].iter().map(|x| BigRational::from_integer(x.clone())).collect();
        for j in 0..i {
            let mut num = BigRational::zero();
            for k in 0..v.len() {
                num += &weights[k] * BigRational::from_integer(rows[i][k].clone()) * &star[j][k];
            }
            let m = num / &norms[j];
            for k in 0..v.len() {
                let t = &m * &star[j][k];
                v[k] -= t;
            }
            mu[i][j] = m;
        }
        let n: BigRational = v.iter().zip(weights).map(|(x, w)| w * x * x).fold(BigRational::zero(), |a, b| a + b);
        norms.push(n);
        star.push(v);
    }
    GramSchmidt { mu, norms }
}

/// LLL with `delta = 3/4` under the weighted inner product `sum_k weights_k x_k y_k`.
pub fn reduced_basis_weighted(gamma: &LatticeBasis, weights: &[BigRational]) -> Result<ReducedBasis> {
    let d = gamma.dim();
    if d > MAX_REDUCE_DIM {
        return Err(Error::resource("lattice dimension", d as u128, MAX_REDUCE_DIM as u128));
    }
    if weights.len() != d || weights.iter().any(|w| !w.is_positive()) {
        return Err(Error::precondition("weights must be d positive rationals"));
    }
    let mut rows = gamma.rows.clone();
    let mut t: Vec<Vec<BigInt>> = (0..d)
        .map(|i| (0..d).map(|j| BigInt::from(u8::from(i == j))).collect())
        .collect();
    let delta = BigRational::new(3.into(), 4.into());
    let mut k = 1;
    while k < d {
        for j in (0..k).rev() {
            let gs = gram_schmidt(&rows, weights);
            let q = round_rational(&gs.mu[k][j]);
            if !q.is_zero() {
                for c in 0..d {
                    let r = &q * &rows[j][c];
                    rows[k][c] -= r;
                    let s = &q * &t[j][c];
                    t[k][c] -= s;
                }
            }
        }
        let gs = gram_schmidt(&rows, weights);
        let m = &gs.mu[k][k - 1];
        if gs.norms[k] >= (&delta - m * m) * &gs.norms[k - 1] {
            k += 1;
        } else {
            rows.swap(k, k - 1);
            t.swap(k, k - 1);
            k = (k - 1).max(1);
        }
    }

    let tm = IntMatrix::new(d, d, t.iter().flatten().cloned().collect())?;
    let det_t = det_bareiss(&tm)?;
    assert!(det_t.abs().is_one(), "change of basis must be unimodular");

    let basis = LatticeBasis { rows, denom: gamma.denom.clone() };
    // weighted covolume^2 = det^2 * prod(weights) / denom^(2d)
    let denom_sq = BigRational::from_integer(num_traits::pow(gamma.denom.clone(), 2));
    let mut prod_sq = BigRational::one();
    for r in &basis.rows {
        prod_sq *= dot(r, r, weights) / &denom_sq;
    }
    let cov = gamma.covolume();
    let mut cov_sq = &cov * &cov;
    for w in weights {
        cov_sq *= w;
    }
    let bound = BigRational::from_integer(num_traits::pow(BigInt::from(4), d * d));
    let within_bound = prod_sq <= bound * &cov_sq;
    let ratio_sq = (prod_sq / cov_sq).to_f64().unwrap_or(f64::INFINITY);
    Ok(ReducedBasis { basis, transform: t, product_ratio: ratio_sq.sqrt(), within_bound })
}

pub fn reduced_basis(gamma: &LatticeBasis) -> Result<ReducedBasis> {
    let w = vec![BigRational::one(); gamma.dim()];
    reduced_basis_weighted(gamma, &w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn standard_basis_is_fixed() {
        let r = reduced_basis(&LatticeBasis::standard(2)).unwrap();
        assert_eq!(r.basis, LatticeBasis::standard(2));
        assert_eq!(r.product_ratio, 1.0);
    }

    #[test]
    fn skewed_basis_reduces_to_ratio_one() {
        let g = LatticeBasis::from_i64(&[vec![1, 0], vec![100, 1]]).unwrap();
        let r = reduced_basis(&g).unwrap();
        assert!((r.product_ratio - 1.0).abs() < 1e-12);
        assert!(r.basis.same_lattice(&g));
    }

    #[test]
    fn random_bases_stay_within_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut done = 0;
        while done < 50 {
            let rows: Vec<Vec<i64>> = (0..3).map(|_| (0..3).map(|_| rng.gen_range(-1000..=1000)).collect()).collect();
            let Ok(g) = LatticeBasis::from_i64(&rows) else { continue };
            let r = reduced_basis(&g).unwrap();
            assert!(r.within_bound);
            assert!(r.product_ratio <= 512.0, "ratio {}", r.product_ratio);
            assert!(r.basis.same_lattice(&g));
            done += 1;
        }
    }

    #[test]
    fn rounding_is_half_away_from_zero() {
        let q = |a: i64, b: i64| round_rational(&BigRational::new(a.into(), b.into()));
        assert_eq!(q(1, 2), BigInt::from(1));
        assert_eq!(q(-1, 2), BigInt::from(-1));
        assert_eq!(q(7, 3), BigInt::from(2));
        assert_eq!(q(-7, 3), BigInt::from(-2));
        assert_eq!(q(0, 5), BigInt::from(0));
    }

    #[test]
    fn dimension_cap() {
        assert!(reduced_basis(&LatticeBasis::standard(9)).unwrap_err().is_resource());
    }
}
