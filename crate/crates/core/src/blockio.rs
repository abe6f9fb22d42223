//! Files as sequences of blocks, block sampling, and exact full scans.
//!
//! A file of `n` encoded values is split into `ceil(n / B)` blocks of `B`
//! values; only the last may be shorter. Reading one block is one I/O. The
//! with-replacement sampler picks blocks with probability proportional to
//! their size, so a sampled block is a draw from the uniform distribution
//! over elements viewed through its block.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;

use crate::augmented::AugmentedValue;
use crate::config::EstimatorConfig;
use crate::distributions::FiniteDistribution;
use crate::error::{Error, Result};
use crate::learners::{learn_ks, learn_linf, LearnedCdf, LearnedHistogram};
use crate::mean::{amplified_mean, amplified_mean_estimator, MeanVariant};
use crate::quantile::instance_optimal_quantile;
use crate::report::{phases, Estimate, EstimateReport, Termination};
use crate::rng::{mix64, stream_rng, StreamRng};
use crate::sequential::{drive, Sequential};
use crate::stream::{key_seed, Draw, SampleStream, StreamSource};

/// How bytes on disk map to values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    /// One value per byte, `v / 255` in [0, 1].
    Byte,
    /// One value per byte, 1 if the byte equals the given one, else 0.
    Indicator(u8),
    /// IEEE-754 little-endian doubles.
    F64Le,
}

impl Encoding {
    pub fn width(&self) -> usize {
        match self {
            Encoding::F64Le => 8,
            _ => 1,
        }
    }

    /// Range every decoded value lies in, when implied by the encoding.
    pub fn natural_range(&self) -> Option<(f64, f64)> {
        match self {
            Encoding::F64Le => None,
            _ => Some((0.0, 1.0)),
        }
    }
}

impl FromStr for Encoding {
    type Err = Error;

    /// `byte`, `f64le`, or `indicator:C` for a single byte `C`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "byte" => Ok(Encoding::Byte),
            "f64le" => Ok(Encoding::F64Le),
            _ => match s.strip_prefix("indicator:").map(str::as_bytes) {
                Some([c]) => Ok(Encoding::Indicator(*c)),
                _ => Err(Error::Config(format!(
                    "unknown encoding `{s}` (expected byte, f64le or indicator:C)"
                ))),
            },
        }
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Encoding::Byte => f.write_str("byte"),
            Encoding::Indicator(c) => write!(f, "indicator:{}", *c as char),
            Encoding::F64Le => f.write_str("f64le"),
        }
    }
}

/// How raw elements become draw values.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Decode {
    Scaled,
    Indicator(u8),
    /// Raw byte codes `0..=255`, used as item indices.
    Items,
    Float,
}

/// An opened block file. Cheap to clone; clones share the handle.
#[derive(Debug, Clone)]
pub struct BlockFile {
    path: PathBuf,
    file: Arc<File>,
    encoding: Encoding,
    block_size: usize,
    n_values: u64,
    range: (f64, f64),
}

/// Opens `path` as blocks of `block_size` values. `range` is required for
/// `f64le` and defaults to [0, 1] for byte encodings. Doubles are checked
/// against the range as blocks are decoded.
pub fn open_block_file(
    path: impl AsRef<Path>,
    encoding: Encoding,
    block_size: usize,
    range: Option<(f64, f64)>,
) -> Result<BlockFile> {
    let path = path.as_ref().to_path_buf();
    if block_size == 0 {
        return Err(Error::Config("block size must be at least 1".into()));
    }
    let range = match (range, encoding.natural_range()) {
        (Some(r), _) | (None, Some(r)) => r,
        (None, None) => {
            return Err(Error::Config(format!(
                "encoding {encoding} needs a declared value range"
            )))
        }
    };
    if !(range.0.is_finite() && range.1.is_finite() && range.0 < range.1) {
        return Err(Error::Config(format!(
            "range [{}, {}] must satisfy lo < hi",
            range.0, range.1
        )));
    }
    if let Some((lo, hi)) = encoding.natural_range() {
        if range.0 > lo || range.1 < hi {
            return Err(Error::Config(format!(
                "range [{}, {}] must cover [{lo}, {hi}] for {encoding}",
                range.0, range.1
            )));
        }
    }
    let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
    let len = file.metadata().map_err(|e| Error::io(&path, e))?.len();
    let width = encoding.width() as u64;
    if len % width != 0 {
        return Err(Error::Input(format!(
            "{}: length {len} is not a multiple of {width}",
            path.display()
        )));
    }
    if len == 0 {
        return Err(Error::Input(format!("{}: file is empty", path.display())));
    }
    Ok(BlockFile {
        path,
        file: Arc::new(file),
        encoding,
        block_size,
        n_values: len / width,
        range,
    })
}

#[cfg(unix)]
fn read_exact_at(file: &File, buf: &mut [u8], offset: u64) -> std::io::Result<()> {
    std::os::unix::fs::FileExt::read_exact_at(file, buf, offset)
}

#[cfg(windows)]
fn read_exact_at(file: &File, mut buf: &mut [u8], mut offset: u64) -> std::io::Result<()> {
    use std::os::windows::fs::FileExt;
    while !buf.is_empty() {
        match file.seek_read(buf, offset) {
            Ok(0) => return Err(std::io::ErrorKind::UnexpectedEof.into()),
            Ok(n) => {
                buf = &mut buf[n..];
                offset += n as u64;
            }
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

impl BlockFile {
    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn encoding(&self) -> Encoding {
        self.encoding
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn n_values(&self) -> u64 {
        self.n_values
    }

    pub fn n_blocks(&self) -> u64 {
        self.n_values.div_ceil(self.block_size as u64)
    }

    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    /// Number of values in block `i`.
    pub fn block_len(&self, i: u64) -> usize {
        let start = i * self.block_size as u64;
        (self.n_values - start).min(self.block_size as u64) as usize
    }

    fn read_raw(&self, first: u64, count: usize, raw: &mut Vec<u8>) -> Result<()> {
        let width = self.encoding.width();
        raw.resize(count * width, 0);
        read_exact_at(&self.file, raw, first * width as u64)
            .map_err(|e| Error::io(&self.path, e))
    }

    fn decode(&self, decode: Decode, first: u64, raw: &[u8], out: &mut Vec<f64>) -> Result<()> {
        out.clear();
        match decode {
            Decode::Scaled => out.extend(raw.iter().map(|&b| b as f64 / 255.0)),
            Decode::Indicator(c) => out.extend(raw.iter().map(|&b| (b == c) as u8 as f64)),
            Decode::Items => out.extend(raw.iter().map(|&b| b as f64)),
            Decode::Float => {
                let (lo, hi) = self.range;
                for (k, chunk) in raw.chunks_exact(8).enumerate() {
                    let v = f64::from_le_bytes(chunk.try_into().unwrap()) + 0.0;
                    if !(v >= lo && v <= hi) {
                        return Err(Error::OutOfRange {
                            path: self.path.clone(),
                            element: first + k as u64,
                            value: v,
                            lo,
                            hi,
                        });
                    }
                    out.push(v);
                }
            }
        }
        Ok(())
    }

    fn default_decode(&self) -> Decode {
        match self.encoding {
            Encoding::Byte => Decode::Scaled,
            Encoding::Indicator(c) => Decode::Indicator(c),
            Encoding::F64Le => Decode::Float,
        }
    }

    /// Decoded values of block `i`, in one read.
    pub fn read_block(&self, i: u64) -> Result<Vec<f64>> {
        let mut raw = Vec::new();
        let mut out = Vec::new();
        self.read_block_into(self.default_decode(), i, &mut raw, &mut out)?;
        Ok(out)
    }

    fn read_block_into(
        &self,
        decode: Decode,
        i: u64,
        raw: &mut Vec<u8>,
        out: &mut Vec<f64>,
    ) -> Result<()> {
        if i >= self.n_blocks() {
            return Err(Error::Input(format!(
                "block {i} out of range (file has {})",
                self.n_blocks()
            )));
        }
        let first = i * self.block_size as u64;
        self.read_raw(first, self.block_len(i), raw)?;
        self.decode(decode, first, raw, out)
    }

    /// Decoded value of element `idx`, in one read.
    pub fn read_element(&self, idx: u64) -> Result<f64> {
        self.read_element_as(self.default_decode(), idx)
    }

    /// Element `idx` as the indicator of byte `c`.
    pub fn read_indicator(&self, c: u8, idx: u64) -> Result<f64> {
        self.read_element_as(Decode::Indicator(c), idx)
    }

    fn read_element_as(&self, decode: Decode, idx: u64) -> Result<f64> {
        if idx >= self.n_values {
            return Err(Error::Input(format!("element {idx} out of range")));
        }
        let mut raw = Vec::with_capacity(8);
        let mut out = Vec::with_capacity(1);
        self.read_raw(idx, 1, &mut raw)?;
        self.decode(decode, idx, &raw, &mut out)?;
        Ok(out[0])
    }

    fn stream_with(&self, decode: Decode, mode: SamplingMode, seed: u64) -> BlockStream {
        let range = match decode {
            Decode::Indicator(_) | Decode::Scaled => (0.0, 1.0),
            Decode::Items => (0.0, 255.0),
            Decode::Float => self.range,
        };
        BlockStream {
            file: self.clone(),
            decode,
            sampler: BlockSampler::new(mode, self.n_values, self.block_size, seed),
            keys: key_seed(seed),
            raw: Vec::new(),
            buf: Vec::new(),
            range,
        }
    }

    /// Stream of sampled blocks with the file's own decoding.
    pub fn stream(&self, mode: SamplingMode, seed: u64) -> BlockStream {
        self.stream_with(self.default_decode(), mode, seed)
    }

    /// Source of independent with-replacement streams, for amplification.
    pub fn source(&self) -> FileSource {
        FileSource {
            file: self.clone(),
            decode: self.default_decode(),
        }
    }
}

/// Block sampling discipline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingMode {
    /// Independent draws, block `i` with probability `len(i) / n`.
    #[default]
    WithReplacement,
    /// Uniformly random remaining block; exhausted after every block was
    /// read once.
    WithoutReplacement,
}

impl FromStr for SamplingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wr" => Ok(SamplingMode::WithReplacement),
            "wor" => Ok(SamplingMode::WithoutReplacement),
            _ => Err(Error::Config(format!("unknown sampling mode `{s}` (wr or wor)"))),
        }
    }
}

/// Seeded block-index generator.
#[derive(Debug, Clone)]
pub struct BlockSampler {
    mode: SamplingMode,
    rng: StreamRng,
    n_values: u64,
    block_size: u64,
    n_blocks: u64,
    drawn: u64,
    swaps: HashMap<u64, u64>,
    reads: u64,
}

impl BlockSampler {
    pub fn new(mode: SamplingMode, n_values: u64, block_size: usize, seed: u64) -> Self {
        let block_size = block_size as u64;
        BlockSampler {
            mode,
            rng: stream_rng(seed),
            n_values,
            block_size,
            n_blocks: n_values.div_ceil(block_size),
            drawn: 0,
            swaps: HashMap::new(),
            reads: 0,
        }
    }

    pub fn reads(&self) -> u64 {
        self.reads
    }

    pub fn is_exhausted(&self) -> bool {
        self.mode == SamplingMode::WithoutReplacement && self.drawn >= self.n_blocks
    }

    /// Next block index; counts one read.
    pub fn next_index(&mut self) -> Result<u64> {
        let i = match self.mode {
            SamplingMode::WithReplacement => self.rng.gen_range(0..self.n_values) / self.block_size,
            SamplingMode::WithoutReplacement => {
                if self.is_exhausted() {
                    return Err(Error::Exhausted { reads: self.reads });
                }
                // Fisher-Yates over a virtual identity array, storing only
                // the displaced entries.
                let d = self.drawn;
                let j = self.rng.gen_range(d..self.n_blocks);
                let at_j = self.swaps.get(&j).copied().unwrap_or(j);
                let at_d = self.swaps.get(&d).copied().unwrap_or(d);
                self.swaps.insert(j, at_d);
                self.swaps.remove(&d);
                self.drawn += 1;
                at_j
            }
        };
        self.reads += 1;
        Ok(i)
    }
}

/// Sampled blocks of a file as a [`SampleStream`].
#[derive(Debug)]
pub struct BlockStream {
    file: BlockFile,
    decode: Decode,
    sampler: BlockSampler,
    keys: u64,
    raw: Vec<u8>,
    buf: Vec<f64>,
    range: (f64, f64),
}

impl BlockStream {
    pub fn sampler(&self) -> &BlockSampler {
        &self.sampler
    }

    /// Samples a block, returning its index and decoded values.
    pub fn sample_block(&mut self) -> Result<(u64, &[f64])> {
        let i = self.sampler.next_index()?;
        self.file
            .read_block_into(self.decode, i, &mut self.raw, &mut self.buf)?;
        Ok((i, &self.buf))
    }
}

impl SampleStream for BlockStream {
    fn next_draw(&mut self) -> Result<Draw<'_>> {
        self.sample_block()?;
        let index = self.sampler.reads();
        Ok(Draw::new(index, mix64(self.keys, index), &self.buf))
    }

    fn reads(&self) -> u64 {
        self.sampler.reads()
    }

    fn range(&self) -> (f64, f64) {
        self.range
    }
}

/// Opens with-replacement block streams over one file.
#[derive(Debug, Clone)]
pub struct FileSource {
    file: BlockFile,
    decode: Decode,
}

impl StreamSource for FileSource {
    type Stream = BlockStream;

    fn open(&self, seed: u64) -> Result<BlockStream> {
        Ok(self
            .file
            .stream_with(self.decode, SamplingMode::WithReplacement, seed))
    }

    fn range(&self) -> (f64, f64) {
        match self.decode {
            Decode::Float => self.file.range,
            Decode::Items => (0.0, 255.0),
            _ => (0.0, 1.0),
        }
    }
}

/// What to estimate on a file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Task {
    Mean,
    /// Fraction of bytes equal to the given one.
    Frequency(u8),
    Quantile(f64),
    /// Item probabilities over an alphabet of the given size.
    Histogram(usize),
    Ecdf,
}

impl Task {
    fn decode(&self, encoding: Encoding) -> Result<Decode> {
        Ok(match (self, encoding) {
            (Task::Frequency(c), Encoding::Byte | Encoding::Indicator(_)) => Decode::Indicator(*c),
            (Task::Frequency(_), Encoding::F64Le) => {
                return Err(Error::Config(
                    "frequency needs a byte or indicator encoding".into(),
                ))
            }
            (Task::Histogram(_), Encoding::Byte) => Decode::Items,
            (_, Encoding::Byte) => Decode::Scaled,
            (_, Encoding::Indicator(c)) => Decode::Indicator(c),
            (_, Encoding::F64Le) => Decode::Float,
        })
    }
}

/// Exact answer of a task.
#[derive(Debug, Clone, PartialEq)]
pub enum ExactAnswer {
    Scalar(f64),
    Histogram(Vec<f64>),
    Cdf(FiniteDistribution),
}

/// Estimate of a task on a file plus any learned object.
#[derive(Debug, Clone, PartialEq)]
pub struct FileEstimate {
    pub report: EstimateReport,
    pub quantile: Option<AugmentedValue>,
    pub histogram: Option<LearnedHistogram>,
    pub cdf: Option<LearnedCdf>,
    /// Set when the estimate came from a full scan.
    pub exact: Option<ExactAnswer>,
}

impl FileEstimate {
    fn plain(report: EstimateReport) -> Self {
        FileEstimate {
            report,
            quantile: None,
            histogram: None,
            cdf: None,
            exact: None,
        }
    }
}

/// Runs the sequential estimator for `task` on blocks sampled from `file`.
///
/// Mean and frequency use the amplified two-phase mean on block means,
/// quantile the multi-scale search, histogram the sup-norm learner, and
/// ecdf the KS learner. `report.reads` counts block reads. In
/// without-replacement mode, running out of blocks triggers a full scan and
/// the exact answer is returned with termination `FullScan`.
pub fn estimate_on_file(
    file: &BlockFile,
    task: Task,
    cfg: &EstimatorConfig,
    mode: SamplingMode,
) -> Result<FileEstimate> {
    cfg.validate()?;
    let decode = task.decode(file.encoding)?;
    if let Task::Histogram(s) = task {
        if s == 0 {
            return Err(Error::Config("alphabet size must be positive".into()));
        }
        if decode == Decode::Items && s > 256 {
            return Err(Error::Config("byte alphabets have at most 256 items".into()));
        }
    }
    if let Task::Quantile(q) = task {
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::Config(format!("quantile level {q} outside (0, 1]")));
        }
    }
    let mut stream = file.stream_with(decode, mode, cfg.seed);
    let attempt = match (task, mode) {
        (Task::Mean | Task::Frequency(_), SamplingMode::WithReplacement) => {
            let source = FileSource {
                file: file.clone(),
                decode,
            };
            amplified_mean(&source, cfg, MeanVariant::Basic)
                .map(|out| FileEstimate::plain(out.report))
        }
        (Task::Mean | Task::Frequency(_), SamplingMode::WithoutReplacement) => {
            let (lo, hi) = stream.range();
            let mut est = amplified_mean_estimator(
                MeanVariant::Basic,
                cfg.eps,
                cfg.delta,
                lo,
                hi,
                &cfg.constants,
            )?;
            drive(&mut est, &mut stream, cfg.budget).map(|termination| {
                FileEstimate::plain(
                    EstimateReport::new(
                        Estimate::Scalar(est.partial().unwrap_or(f64::NAN)),
                        est.phase_counts(),
                        cfg.seed,
                        termination,
                    )
                    .with_reads(stream.reads()),
                )
            })
        }
        (Task::Quantile(q), _) => instance_optimal_quantile(&mut stream, q, cfg).map(|out| {
            FileEstimate {
                quantile: out.estimate,
                ..FileEstimate::plain(out.report)
            }
        }),
        (Task::Histogram(s), _) => learn_linf(&mut stream, s, cfg).map(|out| FileEstimate {
            histogram: Some(out.histogram),
            ..FileEstimate::plain(out.report)
        }),
        (Task::Ecdf, _) => learn_ks(&mut stream, cfg).map(|out| FileEstimate {
            cdf: Some(out.cdf),
            ..FileEstimate::plain(out.report)
        }),
    };
    match attempt {
        Err(Error::Exhausted { reads }) => {
            let mut scan = full_scan(file, task)?;
            scan.report.reads += reads;
            scan.report.seed = cfg.seed;
            Ok(scan)
        }
        other => other,
    }
}

/// Reads every block once and computes the exact answer.
pub fn full_scan(file: &BlockFile, task: Task) -> Result<FileEstimate> {
    let decode = task.decode(file.encoding)?;
    let mut counts: HashMap<u64, u64> = HashMap::new();
    let mut raw = Vec::new();
    let mut buf = Vec::new();
    for i in 0..file.n_blocks() {
        file.read_block_into(decode, i, &mut raw, &mut buf)?;
        for &v in &buf {
            *counts.entry(v.to_bits()).or_insert(0) += 1;
        }
    }
    let n = file.n_values as f64;
    let dist = FiniteDistribution::new(
        counts
            .iter()
            .map(|(&bits, &c)| (f64::from_bits(bits), c as f64 / n)),
    )?;
    let (estimate, exact) = match task {
        Task::Mean | Task::Frequency(_) => {
            let m = exact_mean(&counts, file.n_values);
            (Estimate::Scalar(m), ExactAnswer::Scalar(m))
        }
        Task::Quantile(q) => {
            if !(q > 0.0 && q <= 1.0) {
                return Err(Error::Config(format!("quantile level {q} outside (0, 1]")));
            }
            let v = dist.quantile(q);
            (Estimate::Scalar(v), ExactAnswer::Scalar(v))
        }
        Task::Histogram(s) => {
            let mut probs = vec![0.0; s];
            for (&bits, &c) in &counts {
                let v = f64::from_bits(bits);
                if !(v >= 0.0 && v.fract() == 0.0 && (v as usize) < s) {
                    return Err(Error::Input(format!("item {v} is not an integer in 0..{s}")));
                }
                probs[v as usize] = c as f64 / n;
            }
            let top = probs.iter().copied().fold(0.0, f64::max);
            (Estimate::Scalar(top), ExactAnswer::Histogram(probs))
        }
        Task::Ecdf => (
            Estimate::Scalar(dist.quantile(0.5)),
            ExactAnswer::Cdf(dist),
        ),
    };
    let reads = file.n_blocks();
    let report = EstimateReport::new(estimate, phases([("scan", reads)]), 0, Termination::FullScan)
        .with_reads(reads);
    Ok(FileEstimate {
        exact: Some(exact),
        ..FileEstimate::plain(report)
    })
}

/// Mean from value counts, summed in value order so the result does not
/// depend on hash iteration order.
fn exact_mean(counts: &HashMap<u64, u64>, n: u64) -> f64 {
    let mut items: Vec<(f64, u64)> = counts.iter().map(|(&b, &c)| (f64::from_bits(b), c)).collect();
    items.sort_by(|a, b| a.0.total_cmp(&b.0));
    items.iter().map(|&(v, c)| v * c as f64).sum::<f64>() / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn temp_file(bytes: &[u8]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(bytes).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn block_counts() {
        let f = temp_file(&vec![b'a'; 40960]);
        let bf = open_block_file(f.path(), Encoding::Byte, 4096, None).unwrap();
        assert_eq!(bf.n_blocks(), 10);
        assert_eq!(bf.block_len(9), 4096);
        let f = temp_file(&vec![b'a'; 5000]);
        let bf = open_block_file(f.path(), Encoding::Byte, 4096, None).unwrap();
        assert_eq!(bf.n_blocks(), 2);
        assert_eq!(bf.block_len(1), 904);
        assert_eq!(bf.read_block(1).unwrap().len(), 904);
    }

    #[test]
    fn f64_length_and_range() {
        let f = temp_file(&[0u8; 12]);
        assert!(matches!(
            open_block_file(f.path(), Encoding::F64Le, 2, Some((0.0, 1.0))),
            Err(Error::Input(_))
        ));
        let mut bytes = Vec::new();
        for v in [0.0f64, 1.0, 2.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let f = temp_file(&bytes);
        assert!(open_block_file(f.path(), Encoding::F64Le, 2, None).is_err());
        let bf = open_block_file(f.path(), Encoding::F64Le, 2, Some((0.0, 1.0))).unwrap();
        assert_eq!(bf.read_block(0).unwrap(), vec![0.0, 1.0]);
        assert!(matches!(bf.read_block(1), Err(Error::OutOfRange { element: 2, .. })));
    }

    #[test]
    fn encodings_parse() {
        assert_eq!("byte".parse::<Encoding>().unwrap(), Encoding::Byte);
        assert_eq!("indicator:e".parse::<Encoding>().unwrap(), Encoding::Indicator(b'e'));
        assert_eq!("f64le".parse::<Encoding>().unwrap(), Encoding::F64Le);
        assert!("indicator:".parse::<Encoding>().is_err());
        assert_eq!(Encoding::Indicator(b'e').to_string(), "indicator:e");
    }

    #[test]
    fn without_replacement_is_a_permutation() {
        let mut s = BlockSampler::new(SamplingMode::WithoutReplacement, 100, 10, 5);
        let mut seen: Vec<u64> = (0..10).map(|_| s.next_index().unwrap()).collect();
        assert!(s.is_exhausted());
        assert!(matches!(s.next_index(), Err(Error::Exhausted { reads: 10 })));
        seen.sort();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn sampler_is_deterministic() {
        let mut a = BlockSampler::new(SamplingMode::WithReplacement, 1000, 10, 9);
        let mut b = BlockSampler::new(SamplingMode::WithReplacement, 1000, 10, 9);
        for _ in 0..100 {
            assert_eq!(a.next_index().unwrap(), b.next_index().unwrap());
        }
    }

    #[test]
    fn full_scan_examples() {
        let f = temp_file(b"eeexx");
        let bf = open_block_file(f.path(), Encoding::Byte, 5, None).unwrap();
        let scan = full_scan(&bf, Task::Frequency(b'e')).unwrap();
        assert!((scan.report.value() - 0.6).abs() < 1e-15);
        assert_eq!(scan.report.reads, 1);
        assert_eq!(scan.report.termination, Termination::FullScan);
        let mut bytes = Vec::new();
        for v in [1.0f64, 2.0, 3.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let f = temp_file(&bytes);
        let bf = open_block_file(f.path(), Encoding::F64Le, 2, Some((0.0, 3.0))).unwrap();
        assert_eq!(full_scan(&bf, Task::Quantile(0.5)).unwrap().report.value(), 2.0);
        assert_eq!(full_scan(&bf, Task::Mean).unwrap().report.value(), 2.0);
    }

    #[test]
    fn frequency_on_floats_is_rejected() {
        let f = temp_file(&0.5f64.to_le_bytes());
        let bf = open_block_file(f.path(), Encoding::F64Le, 1, Some((0.0, 1.0))).unwrap();
        let cfg = EstimatorConfig::new(0.1, 0.1, 0).unwrap();
        assert!(estimate_on_file(&bf, Task::Frequency(b'e'), &cfg, SamplingMode::default()).is_err());
    }
}
