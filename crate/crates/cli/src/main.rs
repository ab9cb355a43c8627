//! `sidonlab`: run one analysis from a TOML config and write CSV or JSON.
//!
//! Exit codes: 0 all checked properties hold, 2 usage/config/IO error,
//! 3 a checked property is violated.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] sidonlab::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "sidonlab",
    version,
    about = "Exact analyses of rank-one cutting-and-stacking constructions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Heights, level measures and parameter validation.
    Build(Common),
    /// Nonzero autocorrelations over a shift range.
    Autocorr(Common),
    /// Single-column containment of self-intersections.
    SidonCheck(Common),
    /// `μ(X ∩ T^m X) ≤ μ(X)/r_j` across stages.
    MixingBound(Common),
    /// Disjointness of `T^{pm} X` from `X` wherever `T^m X` meets `X`.
    PowerDisjoint(Common),
    /// Return-mass bounds for the product with itself.
    Dissipativity(Common),
    /// Exact block-polynomial identities and averaged bounds.
    Thm41(Common),
    /// Rigid-versus-mixing comparison for two thinned constructions.
    GammaDisjoint(Common),
    /// Shift polynomials on a slowly decaying l_p vector.
    LpShift(Common),
    /// Monte Carlo orbit estimates against exact autocorrelations.
    OracleCheck(Common),
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for internal parallelism.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output format; inferred from the `--out` extension, JSON by default.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Self::Build(c)
            | Self::Autocorr(c)
            | Self::SidonCheck(c)
            | Self::MixingBound(c)
            | Self::PowerDisjoint(c)
            | Self::Dissipativity(c)
            | Self::Thm41(c)
            | Self::GammaDisjoint(c)
            | Self::LpShift(c)
            | Self::OracleCheck(c) => c,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Self::Build(_) => "build",
            Self::Autocorr(_) => "autocorr",
            Self::SidonCheck(_) => "sidon-check",
            Self::MixingBound(_) => "mixing-bound",
            Self::PowerDisjoint(_) => "power-disjoint",
            Self::Dissipativity(_) => "dissipativity",
            Self::Thm41(_) => "thm41",
            Self::GammaDisjoint(_) => "gamma-disjoint",
            Self::LpShift(_) => "lp-shift",
            Self::OracleCheck(_) => "oracle-check",
        }
    }
}

fn run(cmd: &Command) -> Result<bool, CliError> {
    let common = cmd.common();
    let config_path = &common.config;
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| CliError::Io(format!("{}: {e}", config_path.display())))?;
    let cfg = RunConfig::parse(&text)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Config(e.to_string()))?;
    let out = common.out.as_deref();
    let format = match (common.format, out) {
        (Some(f), _) => f,
        (None, Some(p)) if p.extension().is_some_and(|e| e == "csv") => Format::Csv,
        _ => Format::Json,
    };
    let outcome = pool.install(|| commands::dispatch(cmd.name(), &cfg, common.seed))?;
    let schema = format!("{}/v1", cmd.name());
    let bytes = match format {
        Format::Json => output::json_bytes(&schema, outcome.holds, &outcome.report)?,
        Format::Csv => match &outcome.table {
            Some(t) => output::csv_bytes(&schema, t)?,
            None => {
                return Err(CliError::Config(format!(
                    "{} has no CSV form; use JSON",
                    cmd.name()
                )))
            }
        },
    };
    output::write_out(out, &bytes)?;
    for line in &outcome.violations {
        eprintln!("violation: {line}");
    }
    Ok(outcome.holds)
}

/// Parses `args` (program name first), runs the command and returns the exit code.
fn execute<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli.command) {
        Ok(true) => 0,
        Ok(false) => 3,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(execute(std::env::args_os()))
}

#[cfg(test)]
mod tests;
