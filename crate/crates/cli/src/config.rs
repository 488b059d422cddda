//! Command-line grammar, configuration files and the canonical run configuration.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use bsl_core::fourier::ParamChain;
use bsl_core::singularity::DEFAULT_EXACT_CAP;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

pub const SEED_ENV: &str = "BSL_SEED";

#[derive(Debug, Parser)]
#[command(name = "bsl", version, about = "Random sign matrices, Littlewood-Offord counts, Fourier spectra and progressions")]
pub struct Cli {
    /// 64-bit seed; falls back to the config file, then BSL_SEED, then 0.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: logical cores). Never affects output.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// key=value file with defaults for the global flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Sample-size constant: rows sampled are round(eps0 * n / 100).
    #[arg(long, global = true)]
    pub eps0: Option<f64>,
    /// Exceptional-hyperplane threshold on P(X in V) / P(Y in V).
    #[arg(long, global = true)]
    pub eps1: Option<f64>,
    /// Spectrum threshold on the half-cosine product.
    #[arg(long, global = true)]
    pub eps2: Option<f64>,
    /// Largest n for exact singularity enumeration.
    #[arg(long, global = true)]
    pub exact_cap: Option<usize>,
    /// Largest coefficient-box volume enumerated for a progression.
    #[arg(long, global = true)]
    pub volume_cap: Option<u128>,
    /// Work budget for sumsets and spectra.
    #[arg(long, global = true)]
    pub work_cap: Option<u128>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Human,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Format as ValueEnum>::from_str(s, true)
    }
}

/// A modulus given as `auto` or as an explicit prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrimeArg {
    Auto,
    Value(u64),
}

impl FromStr for PrimeArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            Ok(PrimeArg::Auto)
        } else {
            s.parse().map(PrimeArg::Value).map_err(|e| format!("expected `auto` or a prime: {e}"))
        }
    }
}

/// Integer matrix written as rows separated by `;`, entries by `,`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matrix(pub Vec<Vec<i64>>);

impl FromStr for Matrix {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let rows = s
            .split(';')
            .map(|r| r.split(',').map(|x| x.trim().parse::<i64>().map_err(|e| format!("bad entry `{x}`: {e}"))).collect())
            .collect::<Result<Vec<Vec<i64>>, String>>()?;
        if rows.iter().any(|r| r.len() != rows[0].len()) {
            return Err("rows have different lengths".into());
        }
        Ok(Matrix(rows))
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self.0.iter().map(|r| r.iter().map(i64::to_string).collect::<Vec<_>>().join(",")).collect();
        write!(f, "{}", rows.join(";"))
    }
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Singularity probability of random sign matrices.
    #[command(subcommand)]
    Pn(PnCommand),
    /// Littlewood-Offord counts for a normal vector.
    #[command(subcommand)]
    Lo(LoCommand),
    /// Fourier side: probabilities, spectra, Bohr sets, growth.
    #[command(subcommand)]
    Fourier(FourierCommand),
    /// Generalized arithmetic progressions and sumsets.
    #[command(subcommand)]
    Gap(GapCommand),
    /// Lattice reduction, discrete John, relations, properization.
    #[command(subcommand)]
    Lattice(LatticeCommand),
    /// End-to-end structure pipeline.
    #[command(subcommand)]
    Structure(StructureCommand),
    /// Runs the invariant suite; exits 1 on any violation.
    Selftest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelArg {
    Gray,
    Rows,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PnCommand {
    /// Exact symmetry-reduced count of singular matrices.
    Exact {
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum)]
        kernel: Option<KernelArg>,
    },
    /// Monte-Carlo estimate.
    Mc {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
    },
    /// Exact counts against reference bounds for n = 1..n_max.
    Report {
        #[arg(long, default_value_t = 6)]
        n_max: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CoeffArgs {
    /// Comma-separated integers.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub coeffs: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoCommand {
    /// Number of sign vectors on the hyperplane.
    Count(CoeffArgs),
    /// Combinatorial dimension and its class.
    Dim(CoeffArgs),
    /// Largest atom of the sign sum against the central binomial.
    Erdos(CoeffArgs),
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FourierCommand {
    /// P(X in V) and P(Y in V) through Fourier sums.
    Probs {
        #[command(flatten)]
        a: CoeffArgs,
        #[arg(long, default_value = "auto")]
        p: PrimeArg,
        #[arg(long)]
        mu: Option<f64>,
    },
    /// Residues where the cosine product is at least eps2.
    Spectrum {
        #[command(flatten)]
        a: CoeffArgs,
        #[arg(long, default_value = "auto")]
        p: PrimeArg,
    },
    /// Residues of small Lambda-norm.
    Bohr {
        #[command(flatten)]
        a: CoeffArgs,
        #[arg(long, default_value = "auto")]
        p: PrimeArg,
        #[arg(long, default_value_t = bsl_core::fourier::DEFAULT_BOHR_THRESHOLD)]
        threshold: f64,
    },
    /// Growth of the iterated sumsets of the spectrum.
    Growth {
        #[command(flatten)]
        a: CoeffArgs,
        #[arg(long, default_value = "auto")]
        p: PrimeArg,
        #[arg(long, default_value_t = 4)]
        k_max: u32,
    },
}

/// A progression: basis, lengths and an optional prime (integers when absent).
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GapArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub basis: Vec<i128>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub lengths: Vec<u64>,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub offset: i128,
    /// Work in F_p; integers when omitted.
    #[arg(long)]
    pub p: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SetArgs {
    /// Comma-separated elements.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub a: Vec<i128>,
    #[arg(long)]
    pub p: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapCommand {
    /// Elements of the progression.
    Enum(GapArgs),
    /// Whether the coefficient map is injective.
    Proper(GapArgs),
    /// Progression norm of an element.
    Pnorm {
        #[command(flatten)]
        gap: GapArgs,
        #[arg(long, allow_hyphen_values = true)]
        x: i128,
    },
    /// A + B.
    Sumset {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        b: Vec<i128>,
    },
    /// |A + A| / |A|.
    Double(SetArgs),
    /// Covering of kA by 2A + (k-2)X.
    Cover {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long, default_value_t = 8)]
        k: u32,
    },
    /// Small proper progression containing A.
    Fit {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long, default_value_t = 2)]
        r_max: usize,
        #[arg(long, default_value_t = 16)]
        fit_cap: u64,
    },
    /// Lowers the rank while the coefficients of U are dependent.
    Reduce {
        #[command(flatten)]
        gap: GapArgs,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        u: Vec<i128>,
    },
    /// Checks the structure certificate of a progression for a normal vector.
    Certify {
        #[command(flatten)]
        a: CoeffArgs,
        #[command(flatten)]
        gap: GapArgs,
        #[arg(long, default_value_t = 10.0)]
        c: f64,
        /// Defaults to n^2.
        #[arg(long)]
        bound: Option<u64>,
    },
    /// Same as `structure scan`.
    Scan(ScanArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ScanArgs {
    #[command(flatten)]
    pub a: CoeffArgs,
    #[arg(long, default_value_t = 10.0)]
    pub c: f64,
    #[arg(long)]
    pub bound: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeCommand {
    /// LLL-reduced basis, rows separated by `;`.
    Reduce {
        #[arg(long, allow_hyphen_values = true)]
        basis: Matrix,
        #[arg(long, default_value_t = 1)]
        denom: i64,
    },
    /// Discrete John progression for a box and a lattice.
    John {
        #[arg(long = "box", value_delimiter = ',', required = true)]
        halfwidths: Vec<f64>,
        #[arg(long, allow_hyphen_values = true)]
        basis: Matrix,
        #[arg(long, default_value_t = 1)]
        denom: i64,
    },
    /// Short relation m with m . v = 0 and |m_j| <= N_j.
    Relation {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        v: Vec<i128>,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u64>,
        #[arg(long)]
        p: Option<u64>,
    },
    /// Proper progression containing a symmetric one.
    Properize(GapArgs),
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StructureCommand {
    Scan(ScanArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Pn(PnCommand::Exact { .. }) => "pn exact",
            Command::Pn(PnCommand::Mc { .. }) => "pn mc",
            Command::Pn(PnCommand::Report { .. }) => "pn report",
            Command::Lo(LoCommand::Count(_)) => "lo count",
            Command::Lo(LoCommand::Dim(_)) => "lo dim",
            Command::Lo(LoCommand::Erdos(_)) => "lo erdos",
            Command::Fourier(FourierCommand::Probs { .. }) => "fourier probs",
            Command::Fourier(FourierCommand::Spectrum { .. }) => "fourier spectrum",
            Command::Fourier(FourierCommand::Bohr { .. }) => "fourier bohr",
            Command::Fourier(FourierCommand::Growth { .. }) => "fourier growth",
            Command::Gap(GapCommand::Enum(_)) => "gap enum",
            Command::Gap(GapCommand::Proper(_)) => "gap proper",
            Command::Gap(GapCommand::Pnorm { .. }) => "gap pnorm",
            Command::Gap(GapCommand::Sumset { .. }) => "gap sumset",
            Command::Gap(GapCommand::Double(_)) => "gap double",
            Command::Gap(GapCommand::Cover { .. }) => "gap cover",
            Command::Gap(GapCommand::Fit { .. }) => "gap fit",
            Command::Gap(GapCommand::Reduce { .. }) => "gap reduce",
            Command::Gap(GapCommand::Certify { .. }) => "gap certify",
            Command::Gap(GapCommand::Scan(_)) => "gap scan",
            Command::Lattice(LatticeCommand::Reduce { .. }) => "lattice reduce",
            Command::Lattice(LatticeCommand::John { .. }) => "lattice john",
            Command::Lattice(LatticeCommand::Relation { .. }) => "lattice relation",
            Command::Lattice(LatticeCommand::Properize(_)) => "lattice properize",
            Command::Structure(StructureCommand::Scan(_)) => "structure scan",
            Command::Selftest => "selftest",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Caps {
    pub exact: usize,
    pub volume: u128,
    pub work: u128,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            exact: DEFAULT_EXACT_CAP,
            volume: bsl_core::gap::DEFAULT_VOLUME_CAP,
            work: bsl_core::fourier::DEFAULT_WORK_CAP,
        }
    }
}

/// Everything that determines a run's output. The thread count is kept out:
/// results do not depend on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub chain: ParamChain,
    pub caps: Caps,
    pub format: Format,
    #[serde(skip)]
    pub threads: Option<usize>,
}

#[derive(Debug)]
pub enum ConfigError {
    Usage(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Usage(m) => write!(f, "{m}"),
        }
    }
}

/// Values read from a `--config` file.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub format: Option<Format>,
    pub eps0: Option<f64>,
    pub eps1: Option<f64>,
    pub eps2: Option<f64>,
    pub exact_cap: Option<usize>,
    pub volume_cap: Option<u128>,
    pub work_cap: Option<u128>,
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    v.parse().map_err(|e| ConfigError::Usage(format!("config key `{key}`: {e}")))
}

impl FileConfig {
    /// Lines `key = value`; blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut c = FileConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Usage(format!("config line {}: expected key=value", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "seed" => c.seed = Some(parse_value(k, v)?),
                "threads" => c.threads = Some(parse_value(k, v)?),
                "format" => c.format = Some(parse_value(k, v)?),
                "eps0" => c.eps0 = Some(parse_value(k, v)?),
                "eps1" => c.eps1 = Some(parse_value(k, v)?),
                "eps2" => c.eps2 = Some(parse_value(k, v)?),
                "exact_cap" => c.exact_cap = Some(parse_value(k, v)?),
                "volume_cap" => c.volume_cap = Some(parse_value(k, v)?),
                "work_cap" => c.work_cap = Some(parse_value(k, v)?),
                _ => return Err(ConfigError::Usage(format!("config line {}: unknown key `{k}`", i + 1))),
            }
        }
        Ok(c)
    }
}

impl RunConfig {
    /// Flags win over the config file, which wins over `BSL_SEED`.
    pub fn resolve(cli: Cli, file: FileConfig, env_seed: Option<String>) -> Result<Self, ConfigError> {
        let env_seed = match env_seed {
            Some(s) => Some(parse_value::<u64>(SEED_ENV, &s)?),
            None => None,
        };
        let d = ParamChain::default();
        let caps = Caps::default();
        let chain = ParamChain {
            eps0: cli.eps0.or(file.eps0).unwrap_or(d.eps0),
            eps1: cli.eps1.or(file.eps1).unwrap_or(d.eps1),
            eps2: cli.eps2.or(file.eps2).unwrap_or(d.eps2),
        };
        chain.validate().map_err(|e| ConfigError::Usage(e.to_string()))?;
        Ok(RunConfig {
            command: cli.command,
            seed: cli.seed.or(file.seed).or(env_seed).unwrap_or(0),
            chain,
            caps: Caps {
                exact: cli.exact_cap.or(file.exact_cap).unwrap_or(caps.exact),
                volume: cli.volume_cap.or(file.volume_cap).unwrap_or(caps.volume),
                work: cli.work_cap.or(file.work_cap).unwrap_or(caps.work),
            },
            format: cli.format.or(file.format).unwrap_or(Format::Json),
            threads: cli.threads.or(file.threads),
        })
    }

    /// Compact JSON of every output-determining field, in declaration order.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn from_canonical(s: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(s).map_err(|e| ConfigError::Usage(format!("bad canonical config: {e}")))
    }
}
