//! Probability amplification for monotonic problems.
//!
//! `k` copies of an estimator that fails with probability at most 1/10 run
//! interleaved, one draw per active copy per round in copy order. Once
//! `ceil(0.9 k)` copies have finished, the rest are abandoned and the lower
//! median of the finished outputs is returned.

use crate::augmented::Monotone;
use crate::config::{ceil_count, EstimatorConfig};
use crate::error::Result;
use crate::report::Termination;
use crate::rng::mix64;
use crate::sequential::{merge_phase_counts, Sequential};
use crate::stream::{Draw, SampleStream, StreamSource};

/// Number of copies for failure probability `delta`: 1 when
/// `delta >= 1/10`, else `max(1, ceil(c_amp * ln(1/delta)))`.
pub fn amplification_count(delta: f64, c_amp: f64) -> usize {
    if delta >= 0.1 {
        1
    } else {
        ceil_count(c_amp * (1.0 / delta).ln()).max(1) as usize
    }
}

/// Lower median under the problem's total order.
pub fn lower_median<T: Monotone>(values: &[T]) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.order(b));
    Some(sorted[(sorted.len() - 1) / 2].clone())
}

/// `k` interleaved copies of a base estimator.
#[derive(Debug, Clone)]
pub struct Amplified<E: Sequential> {
    copies: Vec<E>,
    done: Vec<bool>,
    finishers: Vec<usize>,
    needed: usize,
    cursor: usize,
    fed: u64,
    result: Option<E::Output>,
}

impl<E> Amplified<E>
where
    E: Sequential,
    E::Output: Monotone,
{
    /// Panics if `copies` is empty.
    pub fn new(copies: Vec<E>) -> Self {
        assert!(!copies.is_empty(), "amplification needs at least one copy");
        let k = copies.len();
        let done: Vec<bool> = copies.iter().map(Sequential::is_done).collect();
        let copies_fed = copies.iter().map(Sequential::samples).sum();
        let mut amp = Amplified {
            copies,
            done,
            finishers: Vec::new(),
            needed: ceil_count(0.9 * k as f64).clamp(1, k as u64) as usize,
            cursor: 0,
            fed: copies_fed,
            result: None,
        };
        for i in 0..k {
            if amp.done[i] {
                amp.finish(i);
            }
        }
        amp
    }

    pub fn k(&self) -> usize {
        self.copies.len()
    }

    /// Copies that must finish before the median is taken.
    pub fn needed(&self) -> usize {
        self.needed
    }

    pub fn copies(&self) -> &[E] {
        &self.copies
    }

    /// Indices of finished copies, in finishing order.
    pub fn finishers(&self) -> &[usize] {
        &self.finishers
    }

    pub fn per_copy_samples(&self) -> Vec<u64> {
        self.copies.iter().map(Sequential::samples).collect()
    }

    /// Copy that receives the next draw.
    pub fn next_copy(&self) -> usize {
        let k = self.copies.len();
        if self.cursor < k && !self.done[self.cursor] {
            return self.cursor;
        }
        (0..k)
            .map(|j| (self.cursor + j) % k)
            .find(|&i| !self.done[i])
            .unwrap_or(self.cursor % k)
    }

    /// Pushes `draw` into copy `i` and advances the round-robin cursor.
    pub fn feed(&mut self, i: usize, draw: &Draw<'_>) -> bool {
        if self.result.is_some() {
            return true;
        }
        if !self.done[i] {
            self.fed += 1;
            if self.copies[i].push(draw) {
                self.finish(i);
            }
        }
        self.cursor = (i + 1) % self.copies.len();
        self.result.is_some()
    }

    fn finish(&mut self, i: usize) {
        self.done[i] = true;
        self.finishers.push(i);
        if self.finishers.len() == self.needed {
            let outputs: Vec<E::Output> = self
                .finishers
                .iter()
                .filter_map(|&j| self.copies[j].output())
                .collect();
            self.result = lower_median(&outputs);
        }
    }
}

impl<E> Sequential for Amplified<E>
where
    E: Sequential,
    E::Output: Monotone,
{
    type Output = E::Output;

    #[inline]
    fn push(&mut self, draw: &Draw<'_>) -> bool {
        let i = self.next_copy();
        self.feed(i, draw)
    }

    fn is_done(&self) -> bool {
        self.result.is_some()
    }

    fn output(&self) -> Option<E::Output> {
        self.result.clone()
    }

    fn partial(&self) -> Option<E::Output> {
        if self.result.is_some() {
            return self.result.clone();
        }
        let partials: Vec<E::Output> = self.copies.iter().filter_map(E::partial).collect();
        lower_median(&partials)
    }

    fn samples(&self) -> u64 {
        self.fed
    }

    fn phase_counts(&self) -> Vec<(String, u64)> {
        merge_phase_counts(self.copies.iter().flat_map(Sequential::phase_counts))
    }
}

/// Result of [`amplify`].
#[derive(Debug, Clone)]
pub struct AmplifyOutcome<T> {
    pub output: Option<T>,
    pub termination: Termination,
    pub k: usize,
    pub per_copy_samples: Vec<u64>,
    pub phase_counts: Vec<(String, u64)>,
    pub samples: u64,
    pub reads: u64,
}

/// Runs `k = amplification_count(cfg.delta, cfg.constants.c_amp)` copies
/// built by `make(copy_index)`, copy `i` reading its own stream opened with
/// seed `mix64(cfg.seed, i)`.
pub fn amplify<Src, E, F>(source: &Src, cfg: &EstimatorConfig, make: F) -> Result<AmplifyOutcome<E::Output>>
where
    Src: StreamSource,
    E: Sequential,
    E::Output: Monotone,
    F: FnMut(usize) -> E,
{
    let k = amplification_count(cfg.delta, cfg.constants.c_amp);
    let mut streams = (0..k)
        .map(|i| source.open(mix64(cfg.seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let mut amp = Amplified::new((0..k).map(make).collect());
    let mut termination = Termination::Converged;
    while !amp.is_done() {
        if !cfg.budget.allows(amp.samples()) {
            termination = Termination::BudgetExceeded;
            break;
        }
        let i = amp.next_copy();
        let draw = streams[i].next_draw()?;
        amp.feed(i, &draw);
    }
    let output = if termination == Termination::BudgetExceeded {
        amp.partial()
    } else {
        amp.output()
    };
    Ok(AmplifyOutcome {
        output,
        termination,
        k,
        per_copy_samples: amp.per_copy_samples(),
        phase_counts: amp.phase_counts(),
        samples: amp.samples(),
        reads: streams.iter().map(SampleStream::reads).sum(),
    })
}
