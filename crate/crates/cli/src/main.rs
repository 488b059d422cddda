use std::process::ExitCode;

use bsl_cli::commands::{self, Failure};
use bsl_cli::config::{Cli, ConfigError, FileConfig, RunConfig, SEED_ENV};
use bsl_cli::output::{render, Record, Tolerance, TOOL_VERSION};
use clap::Parser;

fn load(cli: Cli) -> Result<RunConfig, ConfigError> {
    let file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError::Usage(format!("cannot read {}: {e}", path.display())))?;
            FileConfig::parse(&text)?
        }
        None => FileConfig::default(),
    };
    RunConfig::resolve(cli, file, std::env::var(SEED_ENV).ok())
}

fn record(cfg: &RunConfig, tolerance: Tolerance, result: serde_json::Value) -> Record {
    Record {
        tool_version: TOOL_VERSION,
        command: cfg.command.name().to_string(),
        config_canonical: cfg.canonical(),
        seed: cfg.seed,
        tolerance,
        result,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let cfg = match load(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(t) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(&cfg) {
        Ok((tolerance, result)) => {
            print!("{}", render(&record(&cfg, tolerance, result), cfg.format));
            ExitCode::SUCCESS
        }
        Err(Failure::Violations(result)) => {
            print!("{}", render(&record(&cfg, Tolerance::Statistical, result), cfg.format));
            eprintln!("error: self-test found violations");
            ExitCode::from(1)
        }
        Err(f) => {
            match &f {
                Failure::Usage(m) | Failure::Resource(m) => eprintln!("error: {m}"),
                Failure::Violations(_) => unreachable!(),
            }
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
