use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::lll::reduced_basis_weighted;
use super::{LatticeBasis, OpenBox};
use crate::error::{Error, Result};

pub const MAX_JOHN_DIM: usize = 5;
pub const DEFAULT_JOHN_CAP: u128 = 10_000_000;

/// `(-N, N) . w` sits inside `B ∩ Γ`, which sits inside `(-cN, cN) . w`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JohnResult {
    pub w: LatticeBasis,
    /// Open coefficient bounds: the progression uses `|n_j| < N_j`.
    pub n: Vec<u64>,
    pub c: u64,
    /// The least integers exceeding `1/(d |w_j|)` in the box-normalized norm.
    pub initial: Vec<u64>,
    pub lattice_points: u64,
    pub product_ratio: f64,
}

/// Integer form of the box test on `rows / denom`.
struct BoxTest {
    rows: Vec<Vec<i128>>,
    // |x_k| * den_k < lim_k
    lim: Vec<i128>,
    den: Vec<i128>,
}

impl BoxTest {
    fn new(w: &LatticeBasis, b: &OpenBox) -> Result<Self> {
        let conv = |x: &BigInt| x.to_i128().ok_or_else(|| Error::Overflow("lattice entry exceeds i128".into()));
        let rows = w.rows.iter().map(|r| r.iter().map(conv).collect::<Result<Vec<_>>>()).collect::<Result<Vec<_>>>()?;
        let mut lim = Vec::new();
        let mut den = Vec::new();
        for h in &b.halfwidths {
            lim.push(conv(&(h.numer() * &w.denom))?);
            den.push(conv(h.denom())?);
        }
        Ok(BoxTest { rows, lim, den })
    }

    fn contains(&self, n: &[i64]) -> bool {
        (0..self.lim.len()).all(|k| {
            let x: i128 = n.iter().zip(&self.rows).map(|(&c, r)| c as i128 * r[k]).sum();
            x.abs() * self.den[k] < self.lim[k]
        })
    }

    /// Every vertex of the coefficient box `|n_j| <= N_j - 1` lies in B.
    fn corners_inside(&self, n: &[u64]) -> bool {
        let d = n.len();
        (0..1u32 << d).all(|mask| {
            let v: Vec<i64> = (0..d)
                .map(|j| {
                    let m = n[j] as i64 - 1;
                    if mask >> j & 1 == 1 { -m } else { m }
                })
                .collect();
            self.contains(&v)
        })
    }
}

fn for_each_in_box(bounds: &[i64], mut visit: impl FnMut(&[i64])) {
    let mut m: Vec<i64> = bounds.iter().map(|&x| -x).collect();
    loop {
        visit(&m);
        let mut j = 0;
        loop {
            if j == m.len() {
                return;
            }
            if m[j] < bounds[j] {
                m[j] += 1;
                break;
            }
            m[j] = -bounds[j];
            j += 1;
        }
    }
}

fn box_volume(bounds: &[i64]) -> u128 {
    bounds.iter().fold(1u128, |acc, &b| acc.saturating_mul(2 * b as u128 + 1))
}

fn inverse(rows: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let d = rows.len();
    let mut a: Vec<Vec<BigRational>> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..d).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }));
            row
        })
        .collect();
    for c in 0..d {
        let piv = (c..d).find(|&r| !a[r][c].is_zero()).expect("invertible");
        a.swap(c, piv);
        let inv = a[c][c].recip();
        for x in a[c].iter_mut() {
            *x = &*x * &inv;
        }
        for r in 0..d {
            if r != c && !a[r][c].is_zero() {
                let f = a[r][c].clone();
                for j in 0..2 * d {
                    let t = &f * &a[c][j];
                    a[r][j] -= t;
                }
            }
        }
    }
    a.into_iter().map(|r| r[d..].to_vec()).collect()
}

/// Largest `t >= lo` with `pred(t)`, given `pred(lo)` and monotone decreasing truth.
fn grow(lo: u64, mut pred: impl FnMut(u64) -> bool) -> u64 {
    let mut good = lo;
    let mut step = 1u64;
    while good.checked_add(step).is_some_and(&mut pred) {
        good += step;
        step = step.saturating_mul(2);
    }
    let mut bad = good.saturating_add(step);
    while bad - good > 1 {
        let mid = good + (bad - good) / 2;
        if pred(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}

/// Finds a reduced basis `w` of Γ and bounds `N` such that the progression
/// `(-N, N) . w` fills the box up to a factor `c`, with both inclusions checked
/// by enumerating `B ∩ Γ`.
pub fn discrete_john(b: &OpenBox, gamma: &LatticeBasis, cap: u128) -> Result<JohnResult> {
    let d = gamma.dim();
    if b.halfwidths.len() != d {
        return Err(Error::Dimension("box and lattice dimensions differ".into()));
    }
    if d > MAX_JOHN_DIM {
        return Err(Error::resource("john dimension", d as u128, MAX_JOHN_DIM as u128));
    }
    let weights: Vec<BigRational> = b.halfwidths.iter().map(|h| (h * h).recip()).collect();
    let red = reduced_basis_weighted(gamma, &weights)?;
    let w = red.basis;

    let denom_sq = BigRational::from_integer(&w.denom * &w.denom);
    let d2 = BigRational::from_integer(BigInt::from((d * d) as u64));
    let mut initial = Vec::with_capacity(d);
    for r in &w.rows {
        let mut q = BigRational::zero();
        for (x, wt) in r.iter().zip(&weights) {
            q += wt * BigRational::from_integer(x * x);
        }
        q /= &denom_sq;
        // least L with L^2 d^2 q > 1
        let t = (&d2 * &q).recip();
        let mut l = t.to_f64().map(|x| x.sqrt().floor() as u64).unwrap_or(0).max(1);
        while l > 1 && BigRational::from_integer(BigInt::from(l - 1).pow(2)) > t {
            l -= 1;
        }
        while BigRational::from_integer(BigInt::from(l).pow(2)) <= t {
            l += 1;
        }
        initial.push(l);
    }

    let test = BoxTest::new(&w, b)?;
    let mut n = initial.clone();
    while !test.corners_inside(&n) {
        n.iter_mut().for_each(|x| *x = (*x / 2).max(1));
    }
    // scale the whole shape up, then let each coordinate take any slack
    let base = n.clone();
    let k = grow(1, |k| {
        let m: Vec<u64> = base.iter().map(|&x| x.saturating_mul(k)).collect();
        test.corners_inside(&m)
    });
    if k > 1 {
        n = base.iter().map(|&x| x * k).collect();
    }
    for j in 0..d {
        let nj = grow(n[j], |t| {
            let mut m = n.clone();
            m[j] = t;
            test.corners_inside(&m)
        });
        n[j] = nj;
    }

    // inclusion (-N, N) . w ⊆ B
    let inner: Vec<i64> = n.iter().map(|&x| x as i64 - 1).collect();
    let vol = box_volume(&inner);
    if vol > cap {
        return Err(Error::resource("john progression points", vol, cap));
    }
    let mut inside = true;
    for_each_in_box(&inner, |m| inside &= test.contains(m));
    assert!(inside, "progression escaped the box");

    // B ∩ Γ through coefficient bounds |n_j| <= sum_k |W^-1_kj| H_k
    let wrat: Vec<Vec<BigRational>> = (0..d).map(|i| w.vector(i)).collect();
    let winv = inverse(&wrat);
    let mut outer = Vec::with_capacity(d);
    for j in 0..d {
        let mut s = BigRational::zero();
        for k in 0..d {
            s += winv[k][j].abs() * &b.halfwidths[k];
        }
        outer.push(s.floor().to_integer().to_i64().ok_or_else(|| Error::Overflow("coefficient bound".into()))?);
    }
    let vol = box_volume(&outer);
    if vol > cap {
        return Err(Error::resource("lattice points in box", vol, cap));
    }
    let mut c = 1u64;
    let mut points = 0u64;
    for_each_in_box(&outer, |m| {
        if test.contains(m) {
            points += 1;
            for (x, &nj) in m.iter().zip(&n) {
                c = c.max(x.unsigned_abs() / nj + 1);
            }
        }
    });

    Ok(JohnResult { w, n, c, initial, lattice_points: points, product_ratio: red.product_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_inclusions(b: &OpenBox, r: &JohnResult) {
        let test = BoxTest::new(&r.w, b).unwrap();
        let inner: Vec<i64> = r.n.iter().map(|&x| x as i64 - 1).collect();
        for_each_in_box(&inner, |m| assert!(test.contains(m)));
        let wide: Vec<i64> = r.n.iter().map(|&x| (x * r.c) as i64 + 5).collect();
        for_each_in_box(&wide, |m| {
            if test.contains(m) {
                for (x, &nj) in m.iter().zip(&r.n) {
                    assert!(x.unsigned_abs() < nj * r.c);
                }
            }
        });
    }

    #[test]
    fn square_box_over_z2() {
        let b = OpenBox::from_f64(&[5.0, 5.0]).unwrap();
        let r = discrete_john(&b, &LatticeBasis::standard(2), DEFAULT_JOHN_CAP).unwrap();
        assert_eq!(r.w, LatticeBasis::standard(2));
        assert_eq!(r.n, vec![5, 5]);
        assert_eq!(r.c, 1);
        assert_eq!(r.lattice_points, 81);
    }

    #[test]
    fn interval_case() {
        let b = OpenBox::from_f64(&[7.5]).unwrap();
        let r = discrete_john(&b, &LatticeBasis::standard(1), DEFAULT_JOHN_CAP).unwrap();
        assert_eq!(r.n, vec![8]);
        assert_eq!(r.c, 1);
        assert_eq!(r.lattice_points, 15);
    }

    #[test]
    fn skewed_lattice() {
        let g = LatticeBasis::from_i64(&[vec![1, 0], vec![100, 1]]).unwrap();
        let b = OpenBox::from_f64(&[10.0, 10.0]).unwrap();
        let r = discrete_john(&b, &g, DEFAULT_JOHN_CAP).unwrap();
        assert!(r.w.same_lattice(&g));
        assert!(r.c <= 16);
        check_inclusions(&b, &r);
    }

    #[test]
    fn thin_box_and_rational_lattice() {
        let g = LatticeBasis::new(crate::linalg::to_big(&[vec![3, 0], vec![1, 2]]), BigInt::from(2)).unwrap();
        let b = OpenBox::from_f64(&[40.0, 3.5]).unwrap();
        let r = discrete_john(&b, &g, DEFAULT_JOHN_CAP).unwrap();
        check_inclusions(&b, &r);
        let b3 = OpenBox::from_f64(&[9.0, 2.0, 30.0]).unwrap();
        let g3 = LatticeBasis::from_i64(&[vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 3]]).unwrap();
        let r3 = discrete_john(&b3, &g3, DEFAULT_JOHN_CAP).unwrap();
        check_inclusions(&b3, &r3);
    }

    #[test]
    fn grow_finds_threshold() {
        assert_eq!(grow(1, |t| t <= 37), 37);
        assert_eq!(grow(5, |t| t <= 5), 5);
    }
}
