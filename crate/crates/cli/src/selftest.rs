//! The invariant suite behind `bsl selftest`. Each check draws its random
//! instances from a generator seeded by `derive_seed(seed, index)`, so the
//! report depends only on the seed.

use std::collections::BTreeMap;

use bsl_core::arith::{det_small_i64, PrimeModulus};
use bsl_core::fourier::{self, ParamChain};
use bsl_core::gap::{self, Ambient, Gap, ScanParams, ZSet, DEFAULT_VOLUME_CAP};
use bsl_core::hyperplane::{self, NormalVector, OdlyzkoMode, SparseLaw};
use bsl_core::lattice::{self, LatticeBasis, OpenBox};
use bsl_core::linalg;
use bsl_core::numeric::derive_seed;
use bsl_core::singularity;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::output::Tolerance;

/// Ceiling on `|Q| / |P|` for properization.
pub const PROPERIZE_RATIO_CEILING: f64 = 1e4;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub tolerance: Tolerance,
    pub passed: bool,
    pub detail: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

fn check(name: &'static str, tolerance: Tolerance, passed: bool, detail: Value) -> Check {
    Check { name, tolerance, passed, detail }
}

fn failed(name: &'static str, tolerance: Tolerance, e: impl std::fmt::Display) -> Check {
    check(name, tolerance, false, json!({ "error": e.to_string() }))
}

fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, index))
}

/// Singular `n x n` sign matrices by brute force over all `2^(n^2)` of them.
pub fn naive_singular_count(n: usize) -> u64 {
    let cells = n * n;
    let mut m = vec![0i64; cells];
    let mut count = 0;
    for bits in 0..1u64 << cells {
        for (i, x) in m.iter_mut().enumerate() {
            *x = if bits >> i & 1 == 1 { -1 } else { 1 };
        }
        if det_small_i64(&mut m.clone(), n) == 0 {
            count += 1;
        }
    }
    count
}

pub fn exact_counts() -> Check {
    let name = "exact_counts";
    let mut rows = Vec::new();
    let mut ok = true;
    for n in 2..=4 {
        match singularity::exact_singularity_count(n, singularity::DEFAULT_EXACT_CAP) {
            Ok(c) => {
                let naive = naive_singular_count(n);
                ok &= c.singular_count == naive as u128 && c.total == 1u128 << (n * n);
                rows.push(json!({ "n": n, "reduced": c.singular_count, "naive": naive, "total": c.total }));
            }
            Err(e) => return failed(name, Tolerance::Exact, e),
        }
    }
    ok &= rows[0]["reduced"] == json!(8);
    check(name, Tolerance::Exact, ok, json!({ "rows": rows }))
}

/// Exact `P_n` against the parallel-lines lower bound for small `n`.
pub fn singularity_floor(n_max: usize) -> Check {
    let name = "singularity_floor";
    match singularity::bound_report(n_max, singularity::DEFAULT_EXACT_CAP) {
        Ok(rows) => {
            let ok = rows.iter().all(|r| r.pn_at_least_parallel_lines);
            let detail: Vec<Value> = rows
                .iter()
                .map(|r| json!({ "n": r.n, "singular_count": r.singular_count, "parallel_lines_count": r.parallel_lines_count }))
                .collect();
            check(name, Tolerance::Exact, ok, json!({ "rows": detail }))
        }
        Err(e) => failed(name, Tolerance::Exact, e),
    }
}

fn random_normal(rng: &mut ChaCha8Rng, n: usize, lo: i64, hi: i64, nonzero: bool) -> NormalVector {
    loop {
        let v: Vec<i64> = (0..n)
            .map(|_| loop {
                let x = rng.gen_range(lo..=hi);
                if !nonzero || x != 0 {
                    break x;
                }
            })
            .collect();
        if let Ok(a) = NormalVector::new(v) {
            return a;
        }
    }
}

pub fn fourier_bridge(seed: u64, instances: usize) -> Check {
    let name = "fourier_bridge";
    let mut rng = rng_for(seed, 3);
    let mut max_err = 0f64;
    let mut max_p = 0u64;
    for _ in 0..instances {
        let n = rng.gen_range(1..=10);
        let a = random_normal(&mut rng, n, -5, 5, false);
        let r = (|| -> bsl_core::Result<f64> {
            let (p, _) = fourier::fourier_prime(&a)?;
            max_p = max_p.max(p.value());
            let exact = hyperplane::lo_count(&a)? as f64 / 2f64.powi(n as i32);
            Ok((fourier::prob_x_fourier(&a, p)? - exact).abs())
        })();
        match r {
            Ok(e) => max_err = max_err.max(e),
            Err(e) => return failed(name, Tolerance::Float, e),
        }
    }
    check(name, Tolerance::Float, max_err <= 1e-9, json!({ "instances": instances, "max_abs_error": max_err, "max_p": max_p }))
}

pub fn scalar_inequality(grid: u64) -> Check {
    let at = fourier::scalar_inequality_check(0.25, grid);
    let over = fourier::scalar_inequality_check(0.26, grid);
    check(
        "scalar_inequality",
        Tolerance::Float,
        at.violations == 0 && over.violations >= 1,
        json!({ "at_quarter": at, "at_0_26": over }),
    )
}

pub fn comparison(seed: u64, instances: usize) -> Check {
    let name = "comparison";
    let mut rng = rng_for(seed, 4);
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut points = 0u64;
    for _ in 0..instances {
        let n = rng.gen_range(2..=8);
        let a = random_normal(&mut rng, n, -6, 6, false);
        let r = fourier::fourier_prime(&a).and_then(|(p, _)| fourier::comparison_check(&a, p, 0.24));
        match r {
            Ok(r) => {
                violations += r.violations;
                points += r.points;
                worst = worst.max(r.max_f_over_gpow).max(r.max_gpow_over_g);
            }
            Err(e) => return failed(name, Tolerance::Float, e),
        }
    }
    check(
        name,
        Tolerance::Float,
        violations == 0,
        json!({ "instances": instances, "points": points, "violations": violations, "max_excess": worst }),
    )
}

pub fn odlyzko(seed: u64, instances: usize) -> Check {
    let name = "odlyzko";
    let mut rng = rng_for(seed, 5);
    let law = SparseLaw::default();
    let mut passed = 0;
    let mut worst_ratio = 0f64;
    let mut done = 0;
    while done < instances {
        let n = rng.gen_range(3..=10);
        let d = rng.gen_range(1..=3.min(n - 1));
        let basis: Vec<Vec<i64>> = (0..d).map(|_| (0..n).map(|_| rng.gen_range(-2..=2)).collect()).collect();
        if linalg::rank(&linalg::to_big(&basis)) != d {
            continue;
        }
        done += 1;
        match hyperplane::odlyzko_check(&basis, n, &law, OdlyzkoMode::Exact) {
            Ok(r) => {
                passed += usize::from(r.ok);
                worst_ratio = worst_ratio.max(r.p_hat / r.bound);
            }
            Err(e) => return failed(name, Tolerance::Exact, e),
        }
    }
    check(
        name,
        Tolerance::Exact,
        passed == instances,
        json!({ "instances": instances, "passed": passed, "mu": law.mu_f64(), "max_ratio_to_bound": worst_ratio }),
    )
}

pub fn erdos(seed: u64, instances: usize) -> Check {
    let name = "erdos";
    let mut rng = rng_for(seed, 6);
    let mut ok = true;
    let mut tight = 0;
    for _ in 0..instances {
        let n = rng.gen_range(1..=12);
        let a = random_normal(&mut rng, n, -20, 20, true);
        match hyperplane::erdos_lo_check(&a) {
            Ok(r) => {
                ok &= r.ok;
                tight += usize::from(r.max_atom == r.bound);
            }
            Err(e) => return failed(name, Tolerance::Exact, e),
        }
    }
    let mut equality = true;
    for n in 1..=12 {
        match hyperplane::erdos_lo_check(&NormalVector::new(vec![1; n]).expect("non-zero")) {
            Ok(r) => equality &= r.max_atom == r.bound,
            Err(e) => return failed(name, Tolerance::Exact, e),
        }
    }
    check(
        name,
        Tolerance::Exact,
        ok && equality,
        json!({ "instances": instances, "tight_instances": tight, "all_ones_equality": equality }),
    )
}

pub fn parseval(seed: u64, instances: usize) -> Check {
    let name = "parseval";
    let mut rng = rng_for(seed, 7);
    let chain = ParamChain::default();
    let mut max_residual = 0f64;
    let mut ok = true;
    let mut sizes = Vec::new();
    let mut skipped = 0;
    for i in 0..instances {
        let n = rng.gen_range(2..=8);
        let a = random_normal(&mut rng, n, -4, 4, true);
        let r = (|| -> bsl_core::Result<(bool, f64, usize)> {
            let (p, _) = fourier::fourier_prime(&a)?;
            let s = fourier::spectrum(&a, p, chain.eps2)?;
            let pr = fourier::parseval_check(&s)?;
            let mut good = pr.ok;
            for k in 1..=3u32 {
                // cubes of large spectra are out of reach; the cap is the contract
                if (s.len() as u128).pow(k) > fourier::DEFAULT_REP_CAP {
                    skipped += 1;
                    continue;
                }
                let rc = fourier::rep_counts(&s, k, fourier::DEFAULT_REP_CAP, derive_seed(seed, 100 + i as u64))?;
                good &= rc.total_ok && rc.cauchy_schwarz_ok;
            }
            Ok((good, pr.relative_residual, s.len()))
        })();
        match r {
            Ok((good, res, len)) => {
                ok &= good;
                max_residual = max_residual.max(res);
                sizes.push(len);
            }
            Err(e) => return failed(name, Tolerance::Float, e),
        }
    }
    check(
        name,
        Tolerance::Float,
        ok && max_residual <= fourier::PARSEVAL_TOL,
        json!({
            "instances": instances,
            "max_relative_residual": max_residual,
            "spectrum_sizes": sizes,
            "rep_counts_skipped_over_cap": skipped,
        }),
    )
}

pub fn ruzsa(seed: u64, instances: usize) -> Check {
    let name = "ruzsa";
    let mut rng = rng_for(seed, 8);
    let mut ok = true;
    let mut max_x = 0;
    for _ in 0..instances {
        let m = rng.gen_range(1..=5);
        let span = rng.gen_range(m as i128..=40);
        let mut pool: Vec<i128> = (1..=span).collect();
        pool.shuffle(&mut rng);
        let mut elems: Vec<i128> = pool[..m].to_vec();
        elems.extend(pool[..m].iter().map(|x| -x));
        elems.push(0);
        let a = ZSet::new(Ambient::Z, elems);
        match gap::ruzsa_cover(&a, 8, gap::DEFAULT_SUMSET_CAP) {
            Ok(r) => {
                ok &= r.ok && r.x_size_ok && r.x_in_three_a && r.checks.iter().all(|c| c.covered);
                max_x = max_x.max(r.x.len());
            }
            Err(e) => return failed(name, Tolerance::Exact, e),
        }
    }
    check(name, Tolerance::Exact, ok, json!({ "instances": instances, "k": 8, "max_x_size": max_x }))
}

fn ratio_bucket(r: f64) -> String {
    if r <= 1.0 {
        return "1".into();
    }
    let mut hi = 2.0;
    while r > hi {
        hi *= 2.0;
    }
    format!("({}, {}]", hi / 2.0, hi)
}

/// Field for properization: above the `10^6 * volume` hypothesis at volume `10^4`.
pub fn properize_prime() -> PrimeModulus {
    PrimeModulus::above(10_000_000_019).expect("a prime exists")
}

pub fn properize_corpus(seed: u64, instances: usize) -> Check {
    let name = "properize";
    let mut rng = rng_for(seed, 9);
    let amb = Ambient::Fp(properize_prime());
    let mut hist: BTreeMap<String, usize> = BTreeMap::new();
    let mut ok = true;
    let mut improper = 0;
    let mut max_ratio = 1f64;
    for _ in 0..instances {
        let r = rng.gen_range(1..=3);
        let basis: Vec<i128> = (0..r).map(|_| loop {
            let v = rng.gen_range(-30..=30);
            if v != 0 {
                break v;
            }
        }).collect();
        let lengths: Vec<u64> = loop {
            let l: Vec<u64> = (0..r).map(|_| 2 * rng.gen_range(0..=15u64) + 1).collect();
            if l.iter().product::<u64>() <= 10_000 {
                break l;
            }
        };
        let p = Gap::symmetric(amb, basis, lengths).expect("valid progression");
        let res = (|| -> bsl_core::Result<bool> {
            let before = p.enumerate(DEFAULT_VOLUME_CAP)?;
            improper += usize::from(before.collisions > 0);
            let q = lattice::properize(&p)?;
            let after = q.output.enumerate(DEFAULT_VOLUME_CAP)?;
            max_ratio = max_ratio.max(q.size_ratio);
            *hist.entry(ratio_bucket(q.size_ratio)).or_default() += 1;
            Ok(after.collisions == 0
                && before.set.is_subset(&after.set)
                && q.output.rank() <= p.rank()
                && q.size_ratio.is_finite()
                && q.size_ratio <= PROPERIZE_RATIO_CEILING)
        })();
        match res {
            Ok(good) => ok &= good,
            Err(e) => return failed(name, Tolerance::Exact, e),
        }
    }
    check(
        name,
        Tolerance::Exact,
        ok,
        json!({ "instances": instances, "improper_inputs": improper, "max_size_ratio": max_ratio, "size_ratio_histogram": hist }),
    )
}

/// `adj(W)` and `det(W)` for `d <= 3`, so that `x W^-1 = x adj(W) / det`.
fn adjugate(w: &[Vec<i128>]) -> (Vec<Vec<i128>>, i128) {
    let d = w.len();
    let minor = |r: usize, c: usize| -> i128 {
        let m: Vec<Vec<i128>> = (0..d)
            .filter(|&i| i != r)
            .map(|i| (0..d).filter(|&j| j != c).map(|j| w[i][j]).collect())
            .collect();
        match m.len() {
            0 => 1,
            1 => m[0][0],
            _ => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        }
    };
    let mut adj = vec![vec![0i128; d]; d];
    for r in 0..d {
        for c in 0..d {
            let s = if (r + c) % 2 == 0 { 1 } else { -1 };
            adj[c][r] = s * minor(r, c);
        }
    }
    let det: i128 = (0..d).map(|c| w[0][c] * adj[c][0]).sum();
    (adj, det)
}

/// Checks both inclusions of a discrete John result by walking every integer
/// point of the box and solving for its lattice coordinates.
fn john_inclusions_hold(halfwidths: &[i64], w: &[Vec<i128>], n: &[u64], c: u64) -> bool {
    let d = w.len();
    let (adj, det) = adjugate(w);
    let mut inner_hits = 0u128;
    let mut x = vec![0i64; d];
    let lim: Vec<i64> = halfwidths.iter().map(|&h| h - 1).collect();
    let mut idx = vec![0i64; d];
    for (i, l) in lim.iter().enumerate() {
        idx[i] = -l;
    }
    loop {
        x.clone_from(&idx);
        let coords: Vec<i128> = (0..d).map(|j| (0..d).map(|k| x[k] as i128 * adj[k][j]).sum()).collect();
        if coords.iter().all(|&t| t % det == 0) {
            let coords: Vec<i128> = coords.iter().map(|t| t / det).collect();
            if coords.iter().zip(n).any(|(&t, &nj)| t.unsigned_abs() >= (c * nj) as u128) {
                return false;
            }
            if coords.iter().zip(n).all(|(&t, &nj)| t.unsigned_abs() < nj as u128) {
                inner_hits += 1;
            }
        }
        let mut j = 0;
        loop {
            if j == d {
                let expected: u128 = n.iter().map(|&x| 2 * x as u128 - 1).product();
                return inner_hits == expected;
            }
            if idx[j] < lim[j] {
                idx[j] += 1;
                break;
            }
            idx[j] = -lim[j];
            j += 1;
        }
    }
}

pub fn john_corpus(seed: u64, instances: usize) -> Check {
    let name = "discrete_john";
    let mut rng = rng_for(seed, 10);
    let mut ok = true;
    let mut max_c = 0;
    let mut done = 0;
    while done < instances {
        let d = rng.gen_range(1..=3);
        let rows: Vec<Vec<i64>> = (0..d).map(|_| (0..d).map(|_| rng.gen_range(-5..=5)).collect()).collect();
        let Ok(g) = LatticeBasis::from_i64(&rows) else { continue };
        done += 1;
        let h: Vec<i64> = (0..d).map(|_| rng.gen_range(1..=12)).collect();
        let b = OpenBox::new(h.iter().map(|&x| BigRational::from_integer(BigInt::from(x))).collect()).expect("positive");
        match lattice::discrete_john(&b, &g, DEFAULT_VOLUME_CAP) {
            Ok(r) => {
                let w: Vec<Vec<i128>> =
                    r.w.rows.iter().map(|row| row.iter().map(|x| x.to_i128().expect("small")).collect()).collect();
                ok &= r.w.same_lattice(&g) && john_inclusions_hold(&h, &w, &r.n, r.c);
                max_c = max_c.max(r.c);
            }
            Err(e) => return failed(name, Tolerance::Exact, e),
        }
    }
    check(name, Tolerance::Exact, ok, json!({ "instances": instances, "max_c": max_c }))
}

pub fn rank_reduction(seed: u64, instances: usize) -> Check {
    let name = "rank_reduction";
    let mut rng = rng_for(seed, 11);
    let amb = Ambient::Fp(PrimeModulus::above(1_000_000_007).expect("prime"));
    let mut ok = true;
    let mut steps_total = 0;
    for _ in 0..instances {
        let r = rng.gen_range(2..=3);
        let target = rng.gen_range(1..r);
        let basis: Vec<i128> = (0..r).map(|i| 1000i128.pow(i as u32) * rng.gen_range(1..=9)).collect();
        let lengths: Vec<u64> = (0..r).map(|_| 2 * rng.gen_range(3..=5) + 1).collect();
        let p = Gap::symmetric(amb, basis, lengths).expect("valid progression");
        // U spans `target` directions of small coefficient vectors
        let dirs: Vec<Vec<i64>> = (0..target).map(|_| (0..r).map(|_| rng.gen_range(-1..=1)).collect()).collect();
        let mut u = vec![0i128];
        for t in -1..=1i64 {
            for s in -1..=1i64 {
                let m: Vec<i64> = (0..r)
                    .map(|j| t * dirs[0][j] + if target > 1 { s * dirs[1][j] } else { 0 })
                    .collect();
                u.push(p.element(&m));
            }
        }
        let u = ZSet::new(amb, u);
        let res = (|| -> bsl_core::Result<bool> {
            let red = gap::rank_reduce(&p, &u)?;
            steps_total += red.steps.len();
            let e = red.gap.enumerate(DEFAULT_VOLUME_CAP)?;
            let contained = u.is_subset(&e.set);
            let coeffs: Vec<Vec<i64>> = u
                .members()
                .iter()
                .map(|&x| e.coefficients(x).expect("contained").to_vec())
                .collect();
            let full = linalg::rank(&linalg::to_big(&coeffs)) == red.gap.rank()
                || u.members().iter().all(|&x| x == 0);
            Ok(contained && full && red.gap.volume() <= p.volume())
        })();
        match res {
            Ok(good) => ok &= good,
            Err(e) => return failed(name, Tolerance::Exact, e),
        }
    }
    check(name, Tolerance::Exact, ok, json!({ "instances": instances, "reductions": steps_total }))
}

pub fn structure_scan_all_ones(n: usize) -> Check {
    let name = "structure_scan";
    let a = NormalVector::new(vec![1; n]).expect("non-zero");
    match gap::structure_scan(&a, &ScanParams::default()) {
        Ok(s) => {
            let exceptional = s.label.as_ref().is_some_and(|l| l.exceptional);
            let (contains, pnorm) = s.check.as_ref().map_or((false, None), |c| (c.contains_all, c.pnorm_sum));
            let clause_two = pnorm.is_some_and(|x| x <= 10.0);
            check(
                name,
                Tolerance::Float,
                exceptional && contains && clause_two,
                json!({
                    "n": n,
                    "exceptional": exceptional,
                    "contains_all": contains,
                    "pnorm_sum": pnorm,
                    "certificate_gap": s.certificate.as_ref().map(|c| &c.gap),
                    "stopped_at": s.stopped_at,
                }),
            )
        }
        Err(e) => failed(name, Tolerance::Float, e),
    }
}

/// Results computed in pools of one and eight workers must agree.
pub fn thread_invariance(seed: u64) -> Check {
    let name = "thread_invariance";
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
        pool.install(|| {
            let mc = singularity::mc_singularity_estimate(8, 20_000, seed).map(|e| (e.hits, e.estimate.to_bits()));
            let exact = singularity::exact_singularity_count_with(5, 5, singularity::ExactKernel::GrayCode)
                .map(|c| c.singular_count);
            let a = NormalVector::new(vec![1, 2, 3, 4, 5]).expect("non-zero");
            let px = fourier::fourier_prime(&a).and_then(|(p, _)| fourier::prob_x_fourier(&a, p)).map(f64::to_bits);
            (mc, exact, px)
        })
    };
    let one = run(1);
    let eight = run(8);
    check(name, Tolerance::Statistical, one == eight, json!({ "agree": one == eight }))
}

pub fn run_all(seed: u64) -> Report {
    let mut checks = vec![
        exact_counts(),
        singularity_floor(5),
        fourier_bridge(seed, 50),
        scalar_inequality(1_000_000),
        comparison(seed, 20),
        odlyzko(seed, 50),
        erdos(seed, 200),
        parseval(seed, 10),
        ruzsa(seed, 50),
        properize_corpus(seed, 200),
        john_corpus(seed, 50),
        rank_reduction(seed, 20),
    ];
    checks.extend([4, 6, 8].map(structure_scan_all_ones));
    checks.push(thread_invariance(seed));
    Report { seed, passed: checks.iter().all(|c| c.passed), checks }
}
