use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use rand::Rng;

use seqest::blockio::{full_scan, open_block_file, BlockFile, Encoding, ExactAnswer, SamplingMode, Task};
use seqest::config::ceil_count;
use seqest::distributions::TextSpec;
use seqest::mean::two_phase_mean_opt;
use seqest::rng::{mix64, stream_rng};
use seqest::EstimatorConfig;

use crate::synth::{text_bytes, Layout};
use crate::{emit, parse_encoding, CliError, CliResult};

/// Algorithms compared by the sweep. Declared in name order so that the
/// derived ordering sorts rows by algorithm name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, ValueEnum)]
pub enum Algo {
    /// Two-phase mean over sampled blocks.
    Block,
    /// Reads every block once.
    Fullscan,
    /// Fixed Hoeffding-size sample of single elements.
    Naive,
}

impl Algo {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algo::Block => "block",
            Algo::Fullscan => "fullscan",
            Algo::Naive => "naive",
        }
    }
}

pub const SWEEP_HEADER: [&str; 9] = [
    "algo", "eps", "trial", "reads", "samples", "estimate", "abs_error", "wall_ns", "seed",
];

/// One row of the sweep CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub algo: Algo,
    pub eps: f64,
    pub trial: u64,
    pub reads: u64,
    pub samples: u64,
    pub estimate: f64,
    pub abs_error: f64,
    pub wall_ns: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Input file; its values under --encoding are averaged.
    #[arg(long, conflicts_with = "synth", required_unless_present = "synth")]
    pub input: Option<PathBuf>,
    /// Generate a pseudo-text input from this spec instead.
    #[arg(long)]
    pub synth: Option<String>,
    #[arg(long, default_value_t = 64 << 20)]
    pub synth_bytes: u64,
    #[arg(long, value_enum, default_value_t = Layout::Iid)]
    pub synth_layout: Layout,
    #[arg(long, default_value = "indicator:e", value_parser = parse_encoding)]
    pub encoding: Encoding,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.03,0.01,0.003")]
    pub eps_list: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    pub trials: u64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, default_value_t = 4096)]
    pub block_size: usize,
    #[arg(long, env = "SEQEST_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "block,naive,fullscan")]
    pub algos: Vec<Algo>,
    /// Record wall-clock time per trial; otherwise `wall_ns` is 0 and the
    /// output is reproducible byte for byte.
    #[arg(long)]
    pub timing: bool,
    /// Output CSV path; stdout when absent or `-`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parameters of one sweep over an open file.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub algos: Vec<Algo>,
    pub eps_list: Vec<f64>,
    pub trials: u64,
    pub delta: f64,
    pub seed: u64,
    pub timing: bool,
}

/// Single-element reads of the naive baseline, `ceil(ln(2/delta) / (2 eps^2))`.
pub fn naive_samples(eps: f64, delta: f64) -> u64 {
    ceil_count((2.0 / delta).ln() / (2.0 * eps * eps)).max(1)
}

/// Seed of trial `trial` at target `eps`.
pub fn trial_seed(base: u64, eps: f64, trial: u64) -> u64 {
    mix64(mix64(base, eps.to_bits()), trial)
}

fn elapsed(start: Option<Instant>) -> u64 {
    start.map_or(0, |s| s.elapsed().as_nanos() as u64)
}

fn naive_mean(file: &BlockFile, n: u64, seed: u64) -> CliResult<f64> {
    let mut rng = stream_rng(seed);
    let mut sum = 0.0;
    for _ in 0..n {
        sum += file.read_element(rng.gen_range(0..file.n_values()))?;
    }
    Ok(sum / n as f64)
}

impl Sweep {
    /// Runs every (algo, eps, trial) and returns rows sorted by
    /// (algo, eps, trial). The full scan runs once and is reported once per
    /// eps as trial 0.
    pub fn run(&self, file: &BlockFile) -> CliResult<Vec<SweepRecord>> {
        for &eps in &self.eps_list {
            EstimatorConfig::new(eps, self.delta, 0)?;
        }
        let start = self.timing.then(Instant::now);
        let scan = full_scan(file, Task::Mean)?;
        let scan_ns = elapsed(start);
        let truth = match scan.exact {
            Some(ExactAnswer::Scalar(v)) => v,
            _ => unreachable!("mean scan is scalar"),
        };
        let mut rows = Vec::new();
        if self.trials == 0 {
            return Ok(rows);
        }
        for &algo in &self.algos {
            for &eps in &self.eps_list {
                if algo == Algo::Fullscan {
                    rows.push(SweepRecord {
                        algo,
                        eps,
                        trial: 0,
                        reads: scan.report.reads,
                        samples: scan.report.samples_used,
                        estimate: truth,
                        abs_error: 0.0,
                        wall_ns: scan_ns,
                        seed: self.seed,
                    });
                    continue;
                }
                for trial in 0..self.trials {
                    let seed = trial_seed(self.seed, eps, trial);
                    let start = self.timing.then(Instant::now);
                    let (estimate, reads, samples) = match algo {
                        Algo::Block => {
                            let cfg = EstimatorConfig::new(eps, self.delta, seed)?;
                            let mut stream = file.stream(SamplingMode::WithReplacement, seed);
                            let out = two_phase_mean_opt(&mut stream, &cfg)?;
                            (out.report.value(), out.report.reads, out.report.samples_used)
                        }
                        Algo::Naive => {
                            let n = naive_samples(eps, self.delta);
                            (naive_mean(file, n, seed)?, n, n)
                        }
                        Algo::Fullscan => unreachable!(),
                    };
                    rows.push(SweepRecord {
                        algo,
                        eps,
                        trial,
                        reads,
                        samples,
                        estimate,
                        abs_error: (estimate - truth).abs(),
                        wall_ns: elapsed(start),
                        seed,
                    });
                }
            }
        }
        rows.sort_by(|a, b| {
            a.algo
                .cmp(&b.algo)
                .then(a.eps.total_cmp(&b.eps))
                .then(a.trial.cmp(&b.trial))
        });
        Ok(rows)
    }
}

/// Serializes rows under [`SWEEP_HEADER`].
pub fn write_csv(rows: &[SweepRecord]) -> CliResult<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            r.algo.as_str().to_string(),
            r.eps.to_string(),
            r.trial.to_string(),
            r.reads.to_string(),
            r.samples.to_string(),
            r.estimate.to_string(),
            r.abs_error.to_string(),
            r.wall_ns.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.into_inner()
        .map_err(|e| CliError::io("<csv>", e.into_error()))
}

/// Scratch input generated for a `--synth` sweep; removed on drop.
struct ScratchFile(PathBuf);

impl Drop for ScratchFile {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

pub fn cmd_bench_sweep(args: &SweepArgs, out: &mut dyn Write) -> CliResult<()> {
    if args.eps_list.is_empty() {
        return Err(CliError::Usage("--eps-list is empty".into()));
    }
    let mut scratch = None;
    let path = match (&args.input, &args.synth) {
        (Some(p), _) => p.clone(),
        (None, Some(spec)) => {
            let spec: TextSpec = spec.parse()?;
            let bs = args.block_size.max(1) as u64;
            let blocks = args.synth_bytes.div_ceil(bs).max(1);
            let bytes = text_bytes(&spec, args.synth_layout, blocks, bs as usize, args.seed);
            let p = std::env::temp_dir().join(format!(
                "seqest-sweep-{}-{}.bin",
                std::process::id(),
                args.seed
            ));
            fs::write(&p, bytes).map_err(|e| CliError::io(&p, e))?;
            scratch = Some(ScratchFile(p.clone()));
            p
        }
        (None, None) => return Err(CliError::Usage("need --input or --synth".into())),
    };
    let file = open_block_file(&path, args.encoding, args.block_size, None)?;
    let sweep = Sweep {
        algos: args.algos.clone(),
        eps_list: args.eps_list.clone(),
        trials: args.trials,
        delta: args.delta,
        seed: args.seed,
        timing: args.timing,
    };
    let rows = sweep.run(&file)?;
    drop(scratch);
    emit(args.out.as_deref(), out, &write_csv(&rows)?)
}
