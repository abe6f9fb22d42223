use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rand::seq::SliceRandom;
use rand::Rng;

use seqest::blockio::{full_scan, open_block_file, Encoding, ExactAnswer, Task};
use seqest::distributions::{exact_quantile, synth_corpus, DistSpec, TextSpec};
use seqest::rng::{mix64, stream_rng};

use crate::{emit, parse_encoding, CliError, CliResult};

/// How values are arranged into blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Layout {
    /// Every element (or mixture block) drawn independently.
    #[default]
    Iid,
    /// Every block constant: one draw repeated across the block.
    UniformBlocks,
    /// An i.i.d. sample in ascending order.
    Sorted,
    /// The same sample as `sorted`, randomly permuted.
    Shuffled,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Value distribution, e.g. `bernoulli:0.5` or `atoms:0=0.2,3=0.8`.
    #[arg(long, conflicts_with = "text", required_unless_present = "text")]
    pub dist: Option<String>,
    /// Pseudo-text spec, e.g. `char=e,p=0.12`.
    #[arg(long)]
    pub text: Option<String>,
    #[arg(long)]
    pub blocks: u64,
    #[arg(long, default_value_t = 4096)]
    pub block_size: usize,
    #[arg(long, value_enum, default_value_t = Layout::Iid)]
    pub layout: Layout,
    #[arg(long, env = "SEQEST_SEED", default_value_t = 0)]
    pub seed: u64,
    /// File encoding: byte or f64le. Text is always byte; values default to
    /// f64le.
    #[arg(long, value_parser = parse_encoding)]
    pub encoding: Option<Encoding>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Deterministic pseudo-text of `blocks * block_size` bytes.
///
/// `UniformBlocks` makes each block either entirely the target byte (with
/// probability equal to the spec frequency) or target-free filler.
pub fn text_bytes(spec: &TextSpec, layout: Layout, blocks: u64, block_size: usize, seed: u64) -> Vec<u8> {
    let n = blocks as usize * block_size;
    match layout {
        Layout::Iid => synth_corpus(spec, n, seed),
        Layout::UniformBlocks => {
            let filler = TextSpec {
                freq: 0.0,
                heterogeneity: seqest::distributions::Heterogeneity::Iid,
                ..spec.clone()
            };
            let mut bytes = synth_corpus(&filler, n, seed);
            let mut rng = stream_rng(mix64(seed, 1));
            for block in bytes.chunks_mut(block_size) {
                if rng.gen::<f64>() < spec.freq {
                    block.fill(spec.target);
                }
            }
            bytes
        }
        Layout::Sorted | Layout::Shuffled => {
            let mut bytes = synth_corpus(spec, n, seed);
            bytes.sort_unstable();
            if layout == Layout::Shuffled {
                bytes.shuffle(&mut stream_rng(mix64(seed, 2)));
            }
            bytes
        }
    }
}

/// Deterministic values of `blocks * block_size` elements.
pub fn dist_values(
    spec: &DistSpec,
    layout: Layout,
    blocks: u64,
    block_size: usize,
    seed: u64,
) -> CliResult<Vec<f64>> {
    let mix = spec.as_mixture();
    if matches!(spec, DistSpec::Blocks(_)) && mix.block_size() != block_size {
        return Err(CliError::Usage(format!(
            "block mixture has blocks of {} values but --block-size is {block_size}",
            mix.block_size()
        )));
    }
    let elements = spec.element_distribution();
    let mut rng = stream_rng(seed);
    let n = blocks as usize * block_size;
    let mut values = Vec::with_capacity(n);
    match (spec, layout) {
        (DistSpec::Blocks(_), Layout::UniformBlocks) => {
            return Err(CliError::Usage(
                "uniform-blocks needs a distribution over single values".into(),
            ))
        }
        (DistSpec::Blocks(_), _) => {
            for _ in 0..blocks {
                values.extend_from_slice(mix.block_with(rng.gen()));
            }
        }
        (DistSpec::Finite(_), Layout::UniformBlocks) => {
            for _ in 0..blocks {
                let v = elements.sample_with(rng.gen());
                values.extend(std::iter::repeat_n(v, block_size));
            }
        }
        (DistSpec::Finite(_), _) => {
            values.extend((0..n).map(|_| elements.sample_with(rng.gen())));
        }
    }
    if matches!(layout, Layout::Sorted | Layout::Shuffled) {
        values.sort_by(f64::total_cmp);
        if layout == Layout::Shuffled {
            values.shuffle(&mut stream_rng(mix64(seed, 2)));
        }
    }
    Ok(values)
}

fn encode(values: &[f64], encoding: Encoding) -> CliResult<Vec<u8>> {
    match encoding {
        Encoding::F64Le => Ok(values.iter().flat_map(|v| v.to_le_bytes()).collect()),
        Encoding::Byte => values
            .iter()
            .map(|&v| {
                if (0.0..=255.0).contains(&v) && v.fract() == 0.0 {
                    Ok(v as u8)
                } else {
                    Err(CliError::Usage(format!(
                        "value {v} does not fit the byte encoding"
                    )))
                }
            })
            .collect(),
        Encoding::Indicator(_) => Err(CliError::Usage(
            "synth writes byte or f64le files".into(),
        )),
    }
}

const QUANTILE_LEVELS: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

fn scalar(ans: Option<ExactAnswer>) -> f64 {
    match ans {
        Some(ExactAnswer::Scalar(v)) => v,
        _ => f64::NAN,
    }
}

pub fn cmd_synth(args: &SynthArgs, out: &mut dyn Write) -> CliResult<()> {
    if args.blocks == 0 || args.block_size == 0 {
        return Err(CliError::Usage("--blocks and --block-size must be positive".into()));
    }
    let mut report = String::new();
    let path = args.out.display();
    if let Some(text) = &args.text {
        let spec: TextSpec = text.parse()?;
        if matches!(args.encoding, Some(e) if e != Encoding::Byte) {
            return Err(CliError::Usage("text is written with the byte encoding".into()));
        }
        let bytes = text_bytes(&spec, args.layout, args.blocks, args.block_size, args.seed);
        emit(Some(&args.out), out, &bytes)?;
        let file = open_block_file(&args.out, Encoding::Byte, args.block_size, None)?;
        let freq = scalar(full_scan(&file, Task::Frequency(spec.target))?.exact);
        let expected = match args.layout {
            Layout::UniformBlocks => spec.freq,
            _ => spec.expected_frequency(),
        };
        writeln!(report, "file: {path}").ok();
        writeln!(report, "values: {}", bytes.len()).ok();
        writeln!(report, "blocks: {}", args.blocks).ok();
        writeln!(report, "encoding: byte").ok();
        writeln!(report, "truth.frequency: {expected}").ok();
        writeln!(report, "file.frequency: {freq}").ok();
    } else {
        let dist = args.dist.as_deref().expect("clap requires --dist or --text");
        let spec: DistSpec = dist.parse()?;
        let encoding = args.encoding.unwrap_or(Encoding::F64Le);
        let values = dist_values(&spec, args.layout, args.blocks, args.block_size, args.seed)?;
        let bytes = encode(&values, encoding)?;
        emit(Some(&args.out), out, &bytes)?;
        let range = match encoding {
            Encoding::F64Le => Some(spec.range()),
            _ => None,
        };
        let file = open_block_file(&args.out, encoding, args.block_size, range)?;
        let elements = spec.element_distribution();
        writeln!(report, "file: {path}").ok();
        writeln!(report, "values: {}", values.len()).ok();
        writeln!(report, "blocks: {}", args.blocks).ok();
        writeln!(report, "encoding: {encoding}").ok();
        writeln!(report, "truth.mean: {}", elements.mean()).ok();
        for q in QUANTILE_LEVELS {
            writeln!(report, "truth.q{q}: {}", exact_quantile(&spec, q)?).ok();
        }
        // Byte files decode to v/255; undo that so both columns share units.
        let unit = match encoding {
            Encoding::Byte => 255.0,
            _ => 1.0,
        };
        let mean = scalar(full_scan(&file, Task::Mean)?.exact) * unit;
        writeln!(report, "file.mean: {mean}").ok();
        for q in QUANTILE_LEVELS {
            let v = scalar(full_scan(&file, Task::Quantile(q))?.exact) * unit;
            writeln!(report, "file.q{q}: {v}").ok();
        }
    }
    out.write_all(report.as_bytes())
        .map_err(|e| CliError::io("<stdout>", e))
}
