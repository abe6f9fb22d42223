use std::io::Write;
use std::path::PathBuf;

use clap::{Args, ValueEnum};

use seqest::blockio::{estimate_on_file, open_block_file, Encoding, FileEstimate, SamplingMode, Task};
use seqest::{Budget, Termination};

use crate::{parse_byte, parse_encoding, parse_mode, parse_range, Accuracy, CliError, CliResult, OutFormat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskKind {
    Mean,
    Frequency,
    Quantile,
    Histogram,
    Ecdf,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    pub task: TaskKind,
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// byte, f64le or indicator:C.
    #[arg(long, default_value = "byte", value_parser = parse_encoding)]
    pub encoding: Encoding,
    #[arg(long, default_value_t = 4096)]
    pub block_size: usize,
    #[command(flatten)]
    pub accuracy: Accuracy,
    /// Value range `lo,hi`; required for f64le.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    pub range: Option<(f64, f64)>,
    /// Target byte for `frequency`.
    #[arg(long = "char", value_parser = parse_byte)]
    pub target: Option<u8>,
    /// Level for `quantile`.
    #[arg(long)]
    pub q: Option<f64>,
    /// Alphabet size for `histogram`.
    #[arg(long)]
    pub alphabet: Option<usize>,
    /// Block sampling: wr (with replacement) or wor.
    #[arg(long, default_value = "wr", value_parser = parse_mode)]
    pub mode: SamplingMode,
    /// Maximum number of sampled blocks.
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long, value_enum, default_value_t = OutFormat::Text)]
    pub out: OutFormat,
}

fn missing(flag: &str, task: &str) -> CliError {
    CliError::Usage(format!("`{task}` needs --{flag}"))
}

impl EstimateArgs {
    pub fn task(&self) -> CliResult<Task> {
        Ok(match self.task {
            TaskKind::Mean => Task::Mean,
            TaskKind::Frequency => {
                Task::Frequency(self.target.ok_or_else(|| missing("char", "frequency"))?)
            }
            TaskKind::Quantile => Task::Quantile(self.q.ok_or_else(|| missing("q", "quantile"))?),
            TaskKind::Histogram => {
                Task::Histogram(self.alphabet.ok_or_else(|| missing("alphabet", "histogram"))?)
            }
            TaskKind::Ecdf => Task::Ecdf,
        })
    }

    fn task_name(&self) -> &'static str {
        match self.task {
            TaskKind::Mean => "mean",
            TaskKind::Frequency => "frequency",
            TaskKind::Quantile => "quantile",
            TaskKind::Histogram => "histogram",
            TaskKind::Ecdf => "ecdf",
        }
    }
}

/// Runs one estimate and prints it. Returns the exit code.
pub fn cmd_estimate(args: &EstimateArgs, out: &mut dyn Write) -> CliResult<u8> {
    let input = args
        .input
        .as_ref()
        .ok_or_else(|| CliError::Usage("missing --input".into()))?;
    let task = args.task()?;
    let mut cfg = args.accuracy.resolve(0.01, 0.05)?;
    if let Some(b) = args.budget {
        if b == 0 {
            return Err(CliError::Usage("--budget must be positive".into()));
        }
        cfg.budget = Budget::Limit(b);
    }
    let file = open_block_file(input, args.encoding, args.block_size, args.range)?;
    let est = estimate_on_file(&file, task, &cfg, args.mode)?;
    let text = match args.out {
        OutFormat::Text => render_text(args.task_name(), &est),
        OutFormat::Csv => render_csv(args.task_name(), &est)?,
    };
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::io("<stdout>", e))?;
    Ok(match est.report.termination {
        Termination::BudgetExceeded => 2,
        _ => 0,
    })
}

fn render_text(task: &str, est: &FileEstimate) -> String {
    let r = &est.report;
    let mut s = format!(
        "task: {task}\nestimate: {}\nreads: {}\nsamples: {}\ntermination: {}\nseed: {}\n",
        r.estimate, r.reads, r.samples_used, r.termination, r.seed
    );
    if let Some(h) = &est.histogram {
        for (j, p) in h.estimates.iter().enumerate().filter(|(_, p)| **p != 0.0) {
            s.push_str(&format!("item {j}: {p}\n"));
        }
    }
    if let Some(cdf) = &est.cdf {
        for (level, point) in cdf.levels.iter().zip(&cdf.points) {
            s.push_str(&format!("level {level}: {}\n", point.value));
        }
    }
    s
}

pub const ESTIMATE_HEADER: [&str; 6] = ["task", "estimate", "reads", "samples", "termination", "seed"];

fn render_csv(task: &str, est: &FileEstimate) -> CliResult<String> {
    let r = &est.report;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(ESTIMATE_HEADER)?;
    w.write_record([
        task.to_string(),
        r.value().to_string(),
        r.reads.to_string(),
        r.samples_used.to_string(),
        r.termination.to_string(),
        r.seed.to_string(),
    ])?;
    let bytes = w.into_inner().map_err(|e| CliError::io("<csv>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
