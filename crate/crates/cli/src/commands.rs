//! Dispatch from a resolved configuration to the library, producing JSON results.

use bsl_core::arith::PrimeModulus;
use bsl_core::fourier::{self, Spectrum};
use bsl_core::gap::{self, Ambient, Certificate, Gap, ScanParams, ZSet};
use bsl_core::hyperplane::{self, NormalVector};
use bsl_core::lattice::{self, LatticeBasis, OpenBox};
use bsl_core::numeric::ExactRational;
use bsl_core::singularity::{self, ExactCount, ExactKernel};
use bsl_core::Error;
use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::{json, Value};

use crate::config::{
    CoeffArgs, Command, FourierCommand, GapArgs, GapCommand, KernelArg, LatticeCommand, LoCommand, Matrix, PnCommand,
    PrimeArg, RunConfig, ScanArgs, SetArgs, StructureCommand,
};
use crate::output::{members_value, Tolerance};
use crate::selftest;

#[derive(Debug)]
pub enum Failure {
    /// Bad input or a violated precondition.
    Usage(String),
    /// A configured resource cap was exceeded.
    Resource(String),
    /// The self-test found violated invariants; the report is still emitted.
    Violations(Value),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Violations(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Resource(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_resource() {
            Failure::Resource(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

type Out = Result<(Tolerance, Value), Failure>;

fn to_json<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("result serializes")
}

fn normal(a: &CoeffArgs) -> Result<NormalVector, Failure> {
    Ok(NormalVector::new(a.coeffs.clone())?)
}

fn prime(a: &NormalVector, p: PrimeArg) -> Result<(PrimeModulus, Option<String>), Failure> {
    match p {
        PrimeArg::Auto => Ok(fourier::fourier_prime(a)?),
        PrimeArg::Value(v) => Ok((PrimeModulus::new(v)?, None)),
    }
}

fn ambient(p: Option<u64>) -> Result<Ambient, Failure> {
    Ok(match p {
        Some(p) => Ambient::Fp(PrimeModulus::new(p)?),
        None => Ambient::Z,
    })
}

fn gap_of(g: &GapArgs) -> Result<Gap, Failure> {
    Ok(Gap::new(ambient(g.p)?, g.offset, g.basis.clone(), g.lengths.clone())?)
}

fn set_of(s: &SetArgs) -> Result<ZSet, Failure> {
    Ok(ZSet::new(ambient(s.p)?, s.a.iter().copied()))
}

fn spectrum_value(s: &Spectrum) -> Value {
    let m: Vec<i128> = s.members.iter().map(|&x| x as i128).collect();
    json!({
        "p": s.p.value(),
        "eps2": s.eps2,
        "size": s.members.len(),
        "members": members_value(&m),
        "boundary": s.boundary,
        "warning": s.warning,
    })
}

fn big_rows(rows: &[Vec<BigInt>]) -> Value {
    json!(rows.iter().map(|r| r.iter().map(BigInt::to_string).collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn basis_value(b: &LatticeBasis) -> Value {
    json!({ "rows": big_rows(&b.rows), "denom": b.denom.to_string() })
}

fn lattice_of(m: &Matrix, denom: i64) -> Result<LatticeBasis, Failure> {
    let rows = m.0.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
    Ok(LatticeBasis::new(rows, BigInt::from(denom))?)
}

fn pn(cmd: &PnCommand, cfg: &RunConfig) -> Out {
    match *cmd {
        PnCommand::Exact { n, kernel } => {
            let kernel = match kernel {
                Some(KernelArg::Gray) => ExactKernel::GrayCode,
                Some(KernelArg::Rows) => ExactKernel::RowCombination,
                None => ExactKernel::default_for(n),
            };
            let c = singularity::exact_singularity_count_with(n, cfg.caps.exact, kernel)?;
            let ratio = ExactRational::from(&BigRational::new(c.singular_count.into(), c.total.into()));
            Ok((
                Tolerance::Exact,
                json!({
                    "n": c.n,
                    "singular_count": c.singular_count,
                    "total": c.total,
                    "normalized_count": c.normalized_count,
                    "orbit_size": ExactCount::orbit_size(n),
                    "p_n": c.p_n(),
                    "p_n_exact": ratio,
                }),
            ))
        }
        PnCommand::Mc { n, trials } => {
            let e = singularity::mc_singularity_estimate(n, trials, cfg.seed)?;
            Ok((Tolerance::Statistical, to_json(&e)))
        }
        PnCommand::Report { n_max } => {
            let rows = singularity::bound_report(n_max, cfg.caps.exact)?;
            Ok((Tolerance::Exact, json!({ "rows": rows })))
        }
    }
}

fn lo(cmd: &LoCommand) -> Out {
    match cmd {
        LoCommand::Count(a) => {
            let v = normal(a)?;
            Ok((Tolerance::Exact, json!({ "coeffs": v.coeffs(), "count": hyperplane::lo_count(&v)? })))
        }
        LoCommand::Dim(a) => {
            let v = normal(a)?;
            let d = hyperplane::comb_dimension(&v)?;
            Ok((
                Tolerance::Exact,
                json!({
                    "coeffs": v.coeffs(),
                    "count": d.cube_count,
                    "d_pm_num": d.d_pm_num,
                    "d_pm_den": d.d_pm_den,
                    "d_pm": d.d_pm(),
                    "class": d.class,
                    "exceeds_three_quarters": d.exceeds_three_quarters,
                    "sandwich_holds": d.sandwich_holds(),
                }),
            ))
        }
        LoCommand::Erdos(a) => {
            let v = normal(a)?;
            let mut r = to_json(&hyperplane::erdos_lo_check(&v)?);
            r["coeffs"] = json!(v.coeffs());
            Ok((Tolerance::Exact, r))
        }
    }
}

fn fourier_cmd(cmd: &FourierCommand, cfg: &RunConfig) -> Out {
    let chain = json!(cfg.chain);
    match cmd {
        FourierCommand::Probs { a, p, mu } => {
            let v = normal(a)?;
            let (p, note) = prime(&v, *p)?;
            let mu = mu.unwrap_or(cfg.chain.mu());
            let px = fourier::prob_x_fourier(&v, p)?;
            let py = fourier::prob_y_fourier(&v, p, mu)?;
            Ok((
                Tolerance::Float,
                json!({ "coeffs": v.coeffs(), "p": p.value(), "prime_note": note, "mu": mu, "chain": chain, "p_x": px, "p_y": py }),
            ))
        }
        FourierCommand::Spectrum { a, p } => {
            let v = normal(a)?;
            let (p, note) = prime(&v, *p)?;
            let s = fourier::spectrum(&v, p, cfg.chain.eps2)?;
            let mut r = spectrum_value(&s);
            r["prime_note"] = json!(note);
            r["chain"] = chain;
            r["parseval"] = to_json(&fourier::parseval_check(&s)?);
            Ok((Tolerance::Float, r))
        }
        FourierCommand::Bohr { a, p, threshold } => {
            let v = normal(a)?;
            let (p, note) = prime(&v, *p)?;
            let s = fourier::spectrum(&v, p, cfg.chain.eps2)?;
            let comb = hyperplane::comb_dimension(&v).ok();
            let b = fourier::bohr_set(&s, *threshold, fourier::DEFAULT_BOHR_SCAN_CAP, comb.as_ref())?;
            let m: Vec<i128> = b.members.iter().map(|&x| x as i128).collect();
            Ok((
                Tolerance::Float,
                json!({
                    "p": p.value(),
                    "prime_note": note,
                    "chain": chain,
                    "spectrum_size": b.spectrum_size,
                    "threshold": b.threshold,
                    "size": b.members.len(),
                    "members": members_value(&m),
                    "sumset_size": b.sumset_size,
                    "size_ratio": b.size_ratio,
                }),
            ))
        }
        FourierCommand::Growth { a, p, k_max } => {
            let v = normal(a)?;
            let (p, note) = prime(&v, *p)?;
            let s = fourier::spectrum(&v, p, cfg.chain.eps2)?;
            let g = fourier::lambda_growth(&s, *k_max, cfg.caps.work)?;
            let mut r = to_json(&g);
            r["p"] = json!(p.value());
            r["prime_note"] = json!(note);
            r["chain"] = chain;
            Ok((Tolerance::Float, r))
        }
    }
}

fn scan(s: &ScanArgs, cfg: &RunConfig) -> Out {
    let v = normal(&s.a)?;
    let params = ScanParams { chain: cfg.chain, c: s.c, commensurability_bound: s.bound, ..ScanParams::default() };
    Ok((Tolerance::Float, to_json(&gap::structure_scan(&v, &params)?)))
}

fn gap_cmd(cmd: &GapCommand, cfg: &RunConfig) -> Out {
    let cap = cfg.caps.volume;
    match cmd {
        GapCommand::Enum(g) => {
            let p = gap_of(g)?;
            let e = p.enumerate(cap)?;
            Ok((
                Tolerance::Exact,
                json!({
                    "volume": p.volume(),
                    "size": e.set.len(),
                    "collisions": e.collisions,
                    "proper": e.collisions == 0,
                    "members": members_value(e.set.members()),
                }),
            ))
        }
        GapCommand::Proper(g) => {
            let p = gap_of(g)?;
            let e = p.enumerate(cap)?;
            Ok((Tolerance::Exact, json!({ "proper": e.collisions == 0, "volume": p.volume(), "size": e.set.len() })))
        }
        GapCommand::Pnorm { gap, x } => {
            let p = gap_of(gap)?;
            let pn = gap::PNorm::new(&p, cap)?;
            Ok((
                Tolerance::Float,
                json!({ "x": x, "coefficients": pn.coefficients(*x)?, "norm": pn.norm(*x)?, "norm_sq": pn.norm_sq(*x)? }),
            ))
        }
        GapCommand::Sumset { set, b } => {
            let a = set_of(set)?;
            let b = ZSet::new(a.ambient, b.iter().copied());
            let s = gap::sumset(&a, &b, cfg.caps.work)?;
            Ok((Tolerance::Exact, json!({ "size": s.len(), "members": members_value(s.members()) })))
        }
        GapCommand::Double(set) => {
            let a = set_of(set)?;
            let d = gap::doubling(&a, cfg.caps.work)?;
            Ok((
                Tolerance::Exact,
                json!({ "size": a.len(), "doubling_num": *d.numer(), "doubling_den": *d.denom(), "doubling": *d.numer() as f64 / *d.denom() as f64 }),
            ))
        }
        GapCommand::Cover { set, k } => {
            let a = set_of(set)?;
            Ok((Tolerance::Exact, to_json(&gap::ruzsa_cover(&a, *k, cfg.caps.work)?)))
        }
        GapCommand::Fit { set, r_max, fit_cap } => {
            let a = set_of(set)?;
            Ok((Tolerance::Exact, to_json(&gap::freiman_fit(&a, *r_max, *fit_cap)?)))
        }
        GapCommand::Reduce { gap, u } => {
            let p = gap_of(gap)?;
            let u = ZSet::new(p.ambient, u.iter().copied());
            Ok((Tolerance::Exact, to_json(&gap::rank_reduce(&p, &u)?)))
        }
        GapCommand::Certify { a, gap, c, bound } => {
            let v = normal(a)?;
            let p = gap_of(gap)?;
            let comb = hyperplane::comb_dimension(&v)?;
            let bound = bound.unwrap_or((v.n() * v.n()) as u64);
            // values the check cannot measure (a_i outside P) are stated as zero
            let cert = Certificate::measure(&v, p.clone(), &comb, bound).unwrap_or(Certificate {
                gap: p,
                pnorm_sum: 0.0,
                commensurability_bound: bound,
                volume_ratio: 0.0,
            });
            let report = gap::structure_certificate_check(&v, &cert, *c)?;
            Ok((Tolerance::Float, json!({ "certificate": cert, "report": report })))
        }
        GapCommand::Scan(s) => scan(s, cfg),
    }
}

fn lattice_cmd(cmd: &LatticeCommand, cfg: &RunConfig) -> Out {
    match cmd {
        LatticeCommand::Reduce { basis, denom } => {
            let g = lattice_of(basis, *denom)?;
            let r = lattice::reduced_basis(&g)?;
            Ok((
                Tolerance::Exact,
                json!({
                    "basis": basis_value(&r.basis),
                    "transform": big_rows(&r.transform),
                    "product_ratio": r.product_ratio,
                    "within_bound": r.within_bound,
                    "same_lattice": r.basis.same_lattice(&g),
                }),
            ))
        }
        LatticeCommand::John { halfwidths, basis, denom } => {
            let g = lattice_of(basis, *denom)?;
            let b = OpenBox::from_f64(halfwidths)?;
            let r = lattice::discrete_john(&b, &g, cfg.caps.volume)?;
            Ok((
                Tolerance::Exact,
                json!({
                    "w": basis_value(&r.w),
                    "n": r.n,
                    "c": r.c,
                    "initial": r.initial,
                    "lattice_points": r.lattice_points,
                    "product_ratio": r.product_ratio,
                }),
            ))
        }
        LatticeCommand::Relation { v, n, p } => {
            let amb = ambient(*p)?;
            let r = lattice::find_relation(amb, v, n, lattice::DEFAULT_RELATION_CAP)?;
            Ok((Tolerance::Exact, json!({ "relation": r.map(|r| r.m) })))
        }
        LatticeCommand::Properize(g) => {
            let p = gap_of(g)?;
            Ok((Tolerance::Exact, to_json(&lattice::properize(&p)?)))
        }
    }
}

/// Runs the configured command. The self-test returns its report as a
/// [`Failure::Violations`] when any check fails.
pub fn run(cfg: &RunConfig) -> Out {
    match &cfg.command {
        Command::Pn(c) => pn(c, cfg),
        Command::Lo(c) => lo(c),
        Command::Fourier(c) => fourier_cmd(c, cfg),
        Command::Gap(c) => gap_cmd(c, cfg),
        Command::Lattice(c) => lattice_cmd(c, cfg),
        Command::Structure(StructureCommand::Scan(s)) => scan(s, cfg),
        Command::Selftest => {
            let report = selftest::run_all(cfg.seed);
            let value = to_json(&report);
            if report.passed {
                Ok((Tolerance::Statistical, value))
            } else {
                Err(Failure::Violations(value))
            }
        }
    }
}
