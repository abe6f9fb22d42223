//! Quantile estimation on augmented samples.
//!
//! Every element is paired with a uniform tag and compared
//! lexicographically, so the target quantile is a single point even when
//! the distribution has atoms. The three-phase core estimates the quantile
//! at a fixed accuracy; the multi-scale search calls it at geometrically
//! shrinking scales and stops as soon as two nearby quantiles agree.

use std::cmp::Ordering;

use crate::amplify::{amplification_count, Amplified};
use crate::augmented::AugmentedValue;
use crate::config::{ceil_count, Constants, EstimatorConfig};
use crate::error::{Error, Result};
use crate::report::{phases, Estimate, EstimateReport, Termination};
use crate::sequential::{drive, merge_phase_counts, Sequential};
use crate::stream::{occurrence_tag, Draw, SampleStream};

/// Continualized mass of `block` below `n`:
/// `(#{x < n.value} + n.tag * #{x = n.value}) / len`.
pub fn block_quantile_mass(block: &[f64], n: AugmentedValue) -> f64 {
    assert!(!block.is_empty(), "block must be nonempty");
    let (mut less, mut equal) = (0usize, 0usize);
    for &x in block {
        match x.partial_cmp(&n.value) {
            Some(Ordering::Less) => less += 1,
            Some(Ordering::Equal) => equal += 1,
            _ => {}
        }
    }
    (less as f64 + n.tag * equal as f64) / block.len() as f64
}

#[inline]
fn draw_mass(draw: &Draw<'_>, n: AugmentedValue) -> f64 {
    match draw.values() {
        [x] => {
            if *x < n.value {
                1.0
            } else if *x == n.value {
                n.tag
            } else {
                0.0
            }
        }
        values if values.len() <= 64 => block_quantile_mass(values, n),
        _ => {
            let runs = draw.runs();
            let below = runs.partition_point(|r| r.0 < n.value);
            let less: u32 = runs[..below].iter().map(|r| r.1).sum();
            let equal = runs.get(below).filter(|r| r.0 == n.value).map_or(0, |r| r.1);
            (less as f64 + n.tag * equal as f64) / draw.len() as f64
        }
    }
}

/// Pooled augmented sample of whole draws, stored as value runs so that
/// only elements tied with the answer ever need their tags generated.
#[derive(Debug, Clone, Default)]
struct Pool {
    runs: Vec<(f64, u32, u32)>,
    draws: Vec<(u64, u32)>,
    common_size: Option<u32>,
    mixed_sizes: bool,
}

impl Pool {
    /// Empties the pool, keeping room for `capacity` single-element draws.
    fn reset(&mut self, capacity: usize) {
        self.runs.clear();
        self.draws.clear();
        self.runs.reserve(capacity);
        self.draws.reserve(capacity);
        self.common_size = None;
        self.mixed_sizes = false;
    }

    fn release(&mut self) {
        *self = Pool::default();
    }

    fn push(&mut self, draw: &Draw<'_>) {
        let id = self.draws.len() as u32;
        let size = draw.len() as u32;
        match self.common_size {
            None => self.common_size = Some(size),
            Some(s) if s != size => self.mixed_sizes = true,
            _ => {}
        }
        self.draws.push((draw.key(), size));
        match draw.values() {
            [v] => self.runs.push((*v, 1, id)),
            _ => self
                .runs
                .extend(draw.runs().iter().map(|&(v, c)| (v, c, id))),
        }
    }

    /// Augmented element at which the pooled empirical CDF (each draw
    /// weighted equally, elements uniform within a draw) first reaches `q`.
    /// With equal draw sizes this is the element of 1-based rank
    /// `ceil(q * n)`.
    fn quantile(&mut self, q: f64) -> AugmentedValue {
        assert!(!self.runs.is_empty(), "empty pool");
        if self.common_size == Some(1) && !self.mixed_sizes {
            return self.single_quantile(q);
        }
        self.runs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        if self.mixed_sizes {
            self.weighted_quantile(q)
        } else {
            self.ranked_quantile(q)
        }
    }

    /// Rank selection without sorting, for pools of one-element draws.
    fn single_quantile(&mut self, q: f64) -> AugmentedValue {
        let n = self.runs.len() as u64;
        let rank = ceil_count(q * n as f64).clamp(1, n);
        let (_, pivot, _) =
            self.runs
                .select_nth_unstable_by((rank - 1) as usize, |a, b| a.0.total_cmp(&b.0));
        let v = pivot.0;
        let below = self.runs.iter().filter(|r| r.0 < v).count() as u64;
        let mut tags: Vec<f64> = self
            .runs
            .iter()
            .filter(|r| r.0 == v)
            .map(|r| occurrence_tag(self.draws[r.2 as usize].0, v, 0))
            .collect();
        let k = (rank - below - 1) as usize;
        let (_, tag, _) = tags.select_nth_unstable_by(k, f64::total_cmp);
        AugmentedValue::new(v, *tag)
    }

    fn ranked_quantile(&self, q: f64) -> AugmentedValue {
        let b = self.common_size.unwrap_or(1) as u64;
        let n = b * self.draws.len() as u64;
        let rank = ceil_count(q * n as f64).clamp(1, n);
        let mut below = 0u64;
        let mut i = 0;
        while i < self.runs.len() {
            let v = self.runs[i].0;
            let j = i + self.runs[i..].partition_point(|r| r.0 == v);
            let here: u64 = self.runs[i..j].iter().map(|r| r.1 as u64).sum();
            if below + here >= rank {
                let mut tags = self.tags(i, j);
                let k = (rank - below - 1) as usize;
                let (_, tag, _) = tags.select_nth_unstable_by(k, f64::total_cmp);
                return AugmentedValue::new(v, *tag);
            }
            below += here;
            i = j;
        }
        unreachable!("rank within pool size")
    }

    fn weighted_quantile(&self, q: f64) -> AugmentedValue {
        let target = q * self.draws.len() as f64;
        let tol = 1e-12 * self.draws.len() as f64;
        let weight = |id: u32| 1.0 / self.draws[id as usize].1 as f64;
        let mut below = 0.0;
        let mut i = 0;
        let mut last = None;
        while i < self.runs.len() {
            let v = self.runs[i].0;
            let j = i + self.runs[i..].partition_point(|r| r.0 == v);
            let here: f64 = self.runs[i..j].iter().map(|r| r.1 as f64 * weight(r.2)).sum();
            if below + here >= target - tol {
                let mut tagged: Vec<(f64, f64)> = Vec::new();
                for r in &self.runs[i..j] {
                    let key = self.draws[r.2 as usize].0;
                    tagged.extend((0..r.1).map(|o| (occurrence_tag(key, v, o), weight(r.2))));
                }
                tagged.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
                let mut acc = below;
                for &(tag, w) in &tagged {
                    acc += w;
                    if acc >= target - tol {
                        return AugmentedValue::new(v, tag);
                    }
                }
                return AugmentedValue::new(v, tagged.last().unwrap().0);
            }
            below += here;
            last = Some((i, j));
            i = j;
        }
        let (i, j) = last.expect("nonempty pool");
        let mut tags = self.tags(i, j);
        tags.sort_unstable_by(f64::total_cmp);
        AugmentedValue::new(self.runs[i].0, *tags.last().unwrap())
    }

    fn tags(&self, i: usize, j: usize) -> Vec<f64> {
        let v = self.runs[i].0;
        let mut tags = Vec::new();
        for r in &self.runs[i..j] {
            let key = self.draws[r.2 as usize].0;
            tags.extend((0..r.1).map(|o| occurrence_tag(key, v, o)));
        }
        tags
    }
}

/// Phase quantities of one three-phase run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileTrace {
    pub t1: u64,
    pub n_tilde: AugmentedValue,
    pub sigma_tilde_sq: f64,
    pub t2: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Pilot,
    Spread,
    Final,
    Done,
}

/// Three-phase quantile estimator at a fixed accuracy.
///
/// Phase 1 pools `T1 = ceil(c_t1 / a)` draws for a pilot quantile `N~`.
/// Phase 2 estimates the spread `(1/T1) sum (mass(X, N~) - q)^2` on `T1`
/// fresh draws. Phase 3 pools `T2 = ceil(c_t2 (1/a + s/a^2))` fresh draws
/// and returns their quantile.
#[derive(Debug, Clone)]
pub struct ThreePhaseQuantile {
    q: f64,
    accuracy: f64,
    c_t2: f64,
    t1: u64,
    t2: u64,
    phase: Phase,
    counts: [u64; 3],
    pool: Pool,
    n_tilde: Option<AugmentedValue>,
    spread_sum: f64,
    sigma_tilde_sq: f64,
    result: Option<AugmentedValue>,
}

impl ThreePhaseQuantile {
    pub fn new(q: f64, accuracy: f64, constants: &Constants) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Config(format!("quantile level {q} outside (0, 1)")));
        }
        if !(accuracy.is_finite() && accuracy > 0.0) {
            return Err(Error::Config(format!("accuracy must be > 0, got {accuracy}")));
        }
        Ok(ThreePhaseQuantile {
            q,
            accuracy,
            c_t2: constants.c_t2,
            t1: ceil_count(constants.c_t1 / accuracy).max(1),
            t2: 0,
            phase: Phase::Pilot,
            counts: [0; 3],
            pool: Pool::default(),
            n_tilde: None,
            spread_sum: 0.0,
            sigma_tilde_sq: 0.0,
            result: None,
        })
    }

    pub fn level(&self) -> f64 {
        self.q
    }

    /// Available once the estimator has finished.
    pub fn trace(&self) -> Option<QuantileTrace> {
        (self.phase == Phase::Done).then(|| QuantileTrace {
            t1: self.t1,
            n_tilde: self.n_tilde.expect("pilot done"),
            sigma_tilde_sq: self.sigma_tilde_sq,
            t2: self.t2,
        })
    }
}

impl Sequential for ThreePhaseQuantile {
    type Output = AugmentedValue;

    fn push(&mut self, draw: &Draw<'_>) -> bool {
        match self.phase {
            Phase::Pilot => {
                if self.counts[0] == 0 {
                    self.pool.reset(self.t1.min(1 << 20) as usize);
                }
                self.counts[0] += 1;
                self.pool.push(draw);
                if self.counts[0] == self.t1 {
                    self.n_tilde = Some(self.pool.quantile(self.q));
                    self.phase = Phase::Spread;
                }
            }
            Phase::Spread => {
                self.counts[1] += 1;
                let d = draw_mass(draw, self.n_tilde.expect("pilot done")) - self.q;
                self.spread_sum += d * d;
                if self.counts[1] == self.t1 {
                    self.sigma_tilde_sq = self.spread_sum / self.t1 as f64;
                    let a = self.accuracy;
                    self.t2 = ceil_count(self.c_t2 * (1.0 / a + self.sigma_tilde_sq / (a * a)))
                        .max(1);
                    self.pool.reset(self.t2.min(1 << 20) as usize);
                    self.phase = Phase::Final;
                }
            }
            Phase::Final => {
                self.counts[2] += 1;
                self.pool.push(draw);
                if self.counts[2] == self.t2 {
                    self.result = Some(self.pool.quantile(self.q));
                    self.pool.release();
                    self.phase = Phase::Done;
                }
            }
            Phase::Done => {}
        }
        self.phase == Phase::Done
    }

    fn is_done(&self) -> bool {
        self.phase == Phase::Done
    }

    fn output(&self) -> Option<AugmentedValue> {
        self.result
    }

    fn partial(&self) -> Option<AugmentedValue> {
        self.result.or(self.n_tilde)
    }

    fn samples(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn phase_counts(&self) -> Vec<(String, u64)> {
        phases([
            ("pilot", self.counts[0]),
            ("spread", self.counts[1]),
            ("final", self.counts[2]),
        ])
    }
}

/// Report plus the phase trace of a single three-phase run.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreePhaseOutcome {
    pub report: EstimateReport,
    pub trace: Option<QuantileTrace>,
}

/// One unamplified three-phase run at accuracy `cfg.eps`; correct with
/// probability at least 2/3.
pub fn three_phase_quantile<S: SampleStream + ?Sized>(
    stream: &mut S,
    q: f64,
    cfg: &EstimatorConfig,
) -> Result<ThreePhaseOutcome> {
    cfg.validate()?;
    let mut est = ThreePhaseQuantile::new(q, cfg.eps, &cfg.constants)?;
    let termination = drive(&mut est, stream, cfg.budget)?;
    let estimate = est
        .partial()
        .map_or(Estimate::Scalar(f64::NAN), Estimate::Augmented);
    let report = EstimateReport::new(estimate, est.phase_counts(), cfg.seed, termination)
        .with_reads(stream.reads());
    Ok(ThreePhaseOutcome {
        report,
        trace: est.trace(),
    })
}

/// Number of scales `L = max(1, ceil(log2(1/eps)))`.
pub fn scale_count(eps: f64) -> u32 {
    if eps >= 1.0 {
        1
    } else {
        ceil_count((1.0 / eps).log2()).max(1) as u32
    }
}

/// Multi-scale quantile search.
///
/// At scale `e_i = 2^-i` it runs two amplified three-phase estimators at
/// levels `q -+ offset * e_i` with accuracy `accuracy * e_i` and failure
/// `delta / (10 L)` each. If both land on the same value, that value is the
/// exact quantile and the search stops early; otherwise it moves to the
/// next scale, and after scale `L` it returns the lower estimate.
#[derive(Debug, Clone)]
pub struct InstanceOptimalQuantile {
    q: f64,
    delta: f64,
    constants: Constants,
    scales: u32,
    scale: u32,
    minus: Amplified<ThreePhaseQuantile>,
    plus: Amplified<ThreePhaseQuantile>,
    turn_plus: bool,
    per_scale: Vec<u64>,
    total: u64,
    clamped: u32,
    scale_clamped: bool,
    result: Option<AugmentedValue>,
    termination: Termination,
}

impl InstanceOptimalQuantile {
    /// `q` may be 1 (the maximum); sub-levels are always kept inside (0, 1).
    pub fn new(q: f64, eps: f64, delta: f64, constants: &Constants) -> Result<Self> {
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::Config(format!("quantile level {q} outside (0, 1]")));
        }
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::Config(format!("eps must be > 0, got {eps}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Config(format!("delta must lie in (0, 1), got {delta}")));
        }
        constants.validate()?;
        let scales = scale_count(eps);
        let (minus, plus, clamped) = Self::sub_calls(q, 1, scales, delta, constants)?;
        Ok(InstanceOptimalQuantile {
            q,
            delta,
            constants: *constants,
            scales,
            scale: 1,
            minus,
            plus,
            turn_plus: false,
            per_scale: vec![0],
            total: 0,
            clamped: clamped as u32,
            scale_clamped: clamped,
            result: None,
            termination: Termination::Converged,
        })
    }

    /// The two sub-calls of one scale, and whether either level was
    /// clamped.
    fn sub_calls(
        q: f64,
        scale: u32,
        scales: u32,
        delta: f64,
        c: &Constants,
    ) -> Result<(Amplified<ThreePhaseQuantile>, Amplified<ThreePhaseQuantile>, bool)> {
        let e = 0.5f64.powi(scale as i32);
        let a = c.quantile_accuracy * e;
        let k = amplification_count(0.1 * delta / scales as f64, c.c_amp);
        let mut clamped = false;
        let mut make = |level: f64| -> Result<Amplified<ThreePhaseQuantile>> {
            let inside = level.clamp(a, 1.0 - a);
            clamped |= inside != level;
            let copy = ThreePhaseQuantile::new(inside, a, c)?;
            Ok(Amplified::new(vec![copy; k]))
        };
        let minus = make(q - c.quantile_offset * e)?;
        let plus = make(q + c.quantile_offset * e)?;
        Ok((minus, plus, clamped))
    }

    pub fn level(&self) -> f64 {
        self.q
    }

    /// Number of scales in the full schedule.
    pub fn scales(&self) -> u32 {
        self.scales
    }

    /// Scale `2^-i` of the last round run.
    pub fn achieved_scale(&self) -> f64 {
        0.5f64.powi(self.scale as i32)
    }

    /// Scales at which a sub-quantile level had to be clamped into
    /// `[a, 1 - a]`; such scales never stop early.
    pub fn clamped(&self) -> u32 {
        self.clamped
    }

    fn conclude_scale(&mut self) {
        let lower = self.minus.output().expect("finished");
        let upper = self.plus.output().expect("finished");
        // A clamped level no longer brackets q, so agreement proves nothing.
        if lower.value == upper.value && !self.scale_clamped {
            self.result = Some(lower);
            self.termination = if self.scale < self.scales {
                Termination::EarlyStopped
            } else {
                Termination::Converged
            };
        } else if self.scale == self.scales {
            self.result = Some(lower);
            self.termination = Termination::Converged;
        } else {
            self.scale += 1;
            let (minus, plus, clamped) = Self::sub_calls(
                self.q,
                self.scale,
                self.scales,
                self.delta,
                &self.constants,
            )
            .expect("validated parameters");
            self.minus = minus;
            self.plus = plus;
            self.clamped += clamped as u32;
            self.scale_clamped = clamped;
            self.per_scale.push(0);
        }
    }
}

impl Sequential for InstanceOptimalQuantile {
    type Output = AugmentedValue;

    fn push(&mut self, draw: &Draw<'_>) -> bool {
        if self.result.is_some() {
            return true;
        }
        let use_plus = if self.minus.is_done() {
            true
        } else if self.plus.is_done() {
            false
        } else {
            self.turn_plus
        };
        if use_plus {
            self.plus.push(draw);
        } else {
            self.minus.push(draw);
        }
        self.turn_plus = !use_plus;
        *self.per_scale.last_mut().unwrap() += 1;
        self.total += 1;
        if self.minus.is_done() && self.plus.is_done() {
            self.conclude_scale();
        }
        self.result.is_some()
    }

    fn is_done(&self) -> bool {
        self.result.is_some()
    }

    fn output(&self) -> Option<AugmentedValue> {
        self.result
    }

    fn partial(&self) -> Option<AugmentedValue> {
        self.result.or_else(|| self.minus.partial())
    }

    fn samples(&self) -> u64 {
        self.total
    }

    fn phase_counts(&self) -> Vec<(String, u64)> {
        merge_phase_counts(
            self.per_scale
                .iter()
                .enumerate()
                .map(|(i, &n)| (format!("scale{}", i + 1), n)),
        )
    }

    fn termination(&self) -> Termination {
        self.termination
    }
}

/// Report of the multi-scale search plus where it stopped.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileOutcome {
    pub report: EstimateReport,
    pub estimate: Option<AugmentedValue>,
    pub achieved_scale: f64,
    pub clamped: u32,
}

/// `(eps, delta)`-correct quantile: with probability `1 - delta` the answer
/// `N` satisfies `P[X < N] - eps <= q <= P[X <= N] + eps`.
pub fn instance_optimal_quantile<S: SampleStream + ?Sized>(
    stream: &mut S,
    q: f64,
    cfg: &EstimatorConfig,
) -> Result<QuantileOutcome> {
    cfg.validate()?;
    let mut est = InstanceOptimalQuantile::new(q, cfg.eps, cfg.delta, &cfg.constants)?;
    let termination = drive(&mut est, stream, cfg.budget)?;
    let estimate = est.partial();
    let report = EstimateReport::new(
        estimate.map_or(Estimate::Scalar(f64::NAN), Estimate::Augmented),
        est.phase_counts(),
        cfg.seed,
        termination,
    )
    .with_reads(stream.reads());
    Ok(QuantileOutcome {
        report,
        estimate,
        achieved_scale: est.achieved_scale(),
        clamped: est.clamped(),
    })
}
