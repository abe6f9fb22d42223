//! Sample streams: seeded, deterministic sources of draws.
//!
//! A draw is one sample from the unknown distribution. For plain sequential
//! estimation it holds a single value; in the block setting it holds the
//! `B` values of one block. Every draw also carries a 64-bit key from which
//! its augmentation tags and rounding coin are derived, so randomness that
//! estimators attach to a draw is a pure function of `(seed, index)`.

use std::cell::OnceCell;

use rand::Rng;

use crate::distributions::{BlockMixtureSpec, DistSpec, FiniteDistribution};
use crate::error::{Error, Result};
use crate::rng::{mix64, stream_rng, unit_f64, StreamRng, COIN_DOMAIN, TAG_DOMAIN};

/// One sample: a single value or a whole block.
#[derive(Debug)]
pub struct Draw<'a> {
    index: u64,
    key: u64,
    values: &'a [f64],
    mean: OnceCell<f64>,
    runs: OnceCell<Vec<(f64, u32)>>,
}

impl<'a> Draw<'a> {
    pub fn new(index: u64, key: u64, values: &'a [f64]) -> Self {
        debug_assert!(!values.is_empty());
        Draw {
            index,
            key,
            values,
            mean: OnceCell::new(),
            runs: OnceCell::new(),
        }
    }

    /// Position of the draw in its stream, starting at 1.
    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn values(&self) -> &'a [f64] {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Mean of the block (the value itself for single draws).
    pub fn mean(&self) -> f64 {
        *self.mean.get_or_init(|| match self.values {
            [v] => *v,
            vs => {
                let mut m = 0.0;
                for (i, v) in vs.iter().enumerate() {
                    m += (v - m) / (i + 1) as f64;
                }
                m
            }
        })
    }

    /// Distinct values in increasing order with their multiplicities.
    pub fn runs(&self) -> &[(f64, u32)] {
        self.runs.get_or_init(|| {
            let mut sorted = self.values.to_vec();
            sorted.sort_unstable_by(f64::total_cmp);
            let mut runs: Vec<(f64, u32)> = Vec::new();
            for v in sorted {
                match runs.last_mut() {
                    Some((last, n)) if *last == v => *n += 1,
                    _ => runs.push((v, 1)),
                }
            }
            runs
        })
    }

    /// Uniform in [0, 1) used for randomized rounding of this draw.
    pub fn coin(&self) -> f64 {
        unit_f64(mix64(self.key, COIN_DOMAIN))
    }

    /// Augmentation tag of the `occurrence`-th copy of `value` in this draw.
    pub fn tag(&self, value: f64, occurrence: u32) -> f64 {
        occurrence_tag(self.key, value, occurrence)
    }
}

/// Tag of the `occurrence`-th element equal to `value` in the draw with
/// `key`. Elements are exchangeable within a value, so numbering them by
/// occurrence is enough to give each one its own uniform.
#[inline]
pub fn occurrence_tag(key: u64, value: f64, occurrence: u32) -> f64 {
    unit_f64(mix64(mix64(key, TAG_DOMAIN ^ value.to_bits()), occurrence as u64))
}

/// A single-consumer source of draws.
pub trait SampleStream {
    fn next_draw(&mut self) -> Result<Draw<'_>>;

    /// Block reads performed so far; 0 for synthetic streams.
    fn reads(&self) -> u64;

    /// Declared bounds `[lo, hi]` of every value.
    fn range(&self) -> (f64, f64);
}

impl<S: SampleStream + ?Sized> SampleStream for &mut S {
    fn next_draw(&mut self) -> Result<Draw<'_>> {
        (**self).next_draw()
    }

    fn reads(&self) -> u64 {
        (**self).reads()
    }

    fn range(&self) -> (f64, f64) {
        (**self).range()
    }
}

/// Something that can open independent streams by seed.
pub trait StreamSource {
    type Stream: SampleStream;

    fn open(&self, seed: u64) -> Result<Self::Stream>;

    fn range(&self) -> (f64, f64);
}

/// Seed for the per-draw keys of a stream opened with `seed`.
pub(crate) fn key_seed(seed: u64) -> u64 {
    mix64(seed, TAG_DOMAIN)
}

#[derive(Debug, Clone)]
enum Synthetic {
    Finite(FiniteDistribution),
    Blocks(BlockMixtureSpec),
}

/// Stream over a synthetic distribution or block mixture.
#[derive(Debug, Clone)]
pub struct SyntheticStream {
    source: Synthetic,
    rng: StreamRng,
    keys: u64,
    index: u64,
    buf: [f64; 1],
    range: (f64, f64),
}

/// Default declared range of a synthetic source: the unit interval widened
/// to cover the support.
fn default_range(spec: &DistSpec) -> (f64, f64) {
    let (lo, hi) = spec.range();
    (lo.min(0.0), hi.max(1.0))
}

/// Opens a deterministic stream: the `i`-th draw depends only on
/// `(spec, seed, i)`.
pub fn make_stream(spec: &DistSpec, seed: u64) -> SyntheticStream {
    let source = match spec {
        DistSpec::Finite(d) => Synthetic::Finite(d.clone()),
        DistSpec::Blocks(m) => Synthetic::Blocks(m.clone()),
    };
    SyntheticStream {
        source,
        rng: stream_rng(seed),
        keys: key_seed(seed),
        index: 0,
        buf: [0.0],
        range: default_range(spec),
    }
}

impl SyntheticStream {
    /// Overrides the declared range; it must cover the support.
    pub fn with_range(mut self, lo: f64, hi: f64) -> Result<Self> {
        let (slo, shi) = match &self.source {
            Synthetic::Finite(d) => (d.min(), d.max()),
            Synthetic::Blocks(m) => {
                let d = m.mixture();
                (d.min(), d.max())
            }
        };
        if !(lo < hi && lo <= slo && shi <= hi) {
            return Err(Error::Config(format!(
                "range [{lo}, {hi}] must be nonempty and cover the support [{slo}, {shi}]"
            )));
        }
        self.range = (lo, hi);
        Ok(self)
    }
}

impl SampleStream for SyntheticStream {
    #[inline]
    fn next_draw(&mut self) -> Result<Draw<'_>> {
        self.index += 1;
        let key = mix64(self.keys, self.index);
        let u: f64 = self.rng.gen();
        let values: &[f64] = match &self.source {
            Synthetic::Finite(d) => {
                self.buf[0] = d.sample_with(u);
                &self.buf
            }
            Synthetic::Blocks(m) => m.block_with(u),
        };
        Ok(Draw::new(self.index, key, values))
    }

    fn reads(&self) -> u64 {
        0
    }

    fn range(&self) -> (f64, f64) {
        self.range
    }
}

impl StreamSource for DistSpec {
    type Stream = SyntheticStream;

    fn open(&self, seed: u64) -> Result<SyntheticStream> {
        Ok(make_stream(self, seed))
    }

    fn range(&self) -> (f64, f64) {
        default_range(self)
    }
}

/// Replays a fixed sequence of blocks, then fails with `Exhausted`.
#[derive(Debug, Clone)]
pub struct ReplayStream {
    blocks: Vec<Vec<f64>>,
    keys: u64,
    next: usize,
    range: (f64, f64),
}

impl ReplayStream {
    pub fn new(blocks: Vec<Vec<f64>>, seed: u64, range: (f64, f64)) -> Result<Self> {
        if blocks.iter().any(Vec::is_empty) {
            return Err(Error::Input("replayed blocks must be nonempty".into()));
        }
        Ok(ReplayStream {
            blocks,
            keys: key_seed(seed),
            next: 0,
            range,
        })
    }
}

impl SampleStream for ReplayStream {
    fn next_draw(&mut self) -> Result<Draw<'_>> {
        if self.next >= self.blocks.len() {
            return Err(Error::Exhausted {
                reads: self.next as u64,
            });
        }
        self.next += 1;
        let index = self.next as u64;
        Ok(Draw::new(
            index,
            mix64(self.keys, index),
            &self.blocks[self.next - 1],
        ))
    }

    fn reads(&self) -> u64 {
        0
    }

    fn range(&self) -> (f64, f64) {
        self.range
    }
}
