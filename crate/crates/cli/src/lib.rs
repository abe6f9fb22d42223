//! Command-line front end: file estimation, the read-count benchmark sweep,
//! synthetic input generation and the mean lower-bound construction.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use seqest::blockio::{Encoding, SamplingMode};
use seqest::{Budget, EstimatorConfig};

pub mod bench;
pub mod error;
pub mod estimate;
pub mod hard;
pub mod synth;

pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "seqest", version, about = "Sequential estimation on block-sampled files")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a statistic of a file by sampling blocks.
    Estimate(estimate::EstimateArgs),
    /// Sweep eps and record reads for the block, naive and full-scan
    /// algorithms as CSV.
    BenchSweep(bench::SweepArgs),
    /// Write a synthetic input file and print its true statistics.
    Synth(synth::SynthArgs),
    /// Tilt a distribution into the mean lower-bound partner.
    HardInstance(hard::HardArgs),
}

/// Output format of `estimate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum OutFormat {
    #[default]
    Text,
    Csv,
}

/// Accuracy options shared by estimating commands.
#[derive(Debug, Clone, Args)]
pub struct Accuracy {
    /// Target additive error (default 0.01).
    #[arg(long)]
    pub eps: Option<f64>,
    /// Failure probability (default 0.05).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Base seed.
    #[arg(long, env = "SEQEST_SEED")]
    pub seed: Option<u64>,
    /// `key = value` file overriding constants, eps, delta, seed or budget.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl Accuracy {
    /// Defaults, then the config file, then explicit flags.
    pub fn resolve(&self, default_eps: f64, default_delta: f64) -> CliResult<EstimatorConfig> {
        let mut cfg = EstimatorConfig {
            eps: default_eps,
            delta: default_delta,
            constants: Default::default(),
            seed: 0,
            budget: Budget::Unbounded,
        };
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            cfg.apply_overrides(&text)?;
        }
        if let Some(eps) = self.eps {
            cfg.eps = eps;
        }
        if let Some(delta) = self.delta {
            cfg.delta = delta;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub(crate) fn parse_encoding(s: &str) -> Result<Encoding, String> {
    s.parse().map_err(|e: seqest::Error| e.to_string())
}

pub(crate) fn parse_mode(s: &str) -> Result<SamplingMode, String> {
    s.parse().map_err(|e: seqest::Error| e.to_string())
}

pub(crate) fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `lo,hi`, got `{s}`"))?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad lower bound `{lo}`"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad upper bound `{hi}`"))?;
    Ok((lo, hi))
}

pub(crate) fn parse_byte(s: &str) -> Result<u8, String> {
    match s.as_bytes() {
        [c] => Ok(*c),
        _ => Err(format!("expected a single byte, got `{s}`")),
    }
}

/// Writes to `path`, or to `out` when the path is `-` or absent.
pub(crate) fn emit(path: Option<&Path>, out: &mut dyn Write, bytes: &[u8]) -> CliResult<()> {
    match path {
        Some(p) if p != Path::new("-") => fs::write(p, bytes).map_err(|e| CliError::io(p, e)),
        _ => out
            .write_all(bytes)
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

/// Parses `args` and runs the command, returning the process exit code:
/// 0 on success, 2 when a sample budget ran out, 1 on any error.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = write!(out, "{}", e.render());
            return 0;
        }
        Err(e) if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            let _ = write!(err, "{}", e.render());
            return 1;
        }
        Err(e) => {
            let msg = e.render().to_string();
            let first = msg.lines().next().unwrap_or_default();
            let first = first.strip_prefix("error: ").unwrap_or(first);
            let _ = writeln!(err, "error[E_USAGE]: {first}");
            return 1;
        }
    };
    let result = match &cli.command {
        Command::Estimate(a) => estimate::cmd_estimate(a, out),
        Command::BenchSweep(a) => bench::cmd_bench_sweep(a, out).map(|()| 0),
        Command::Synth(a) => synth::cmd_synth(a, out).map(|()| 0),
        Command::HardInstance(a) => hard::cmd_hard_instance(a, out).map(|()| 0),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error[{}]: {e}", e.code());
            1
        }
    }
}
