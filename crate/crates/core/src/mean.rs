//! Additive and multiplicative mean estimation with adaptive sample size.
//!
//! Values are rescaled to [0, 1] using the stream's declared range, so the
//! target error becomes `eps' = eps / (hi - lo)`. Block draws are reduced to
//! their block mean first.

use crate::amplify::{amplification_count, amplify, Amplified};
use crate::config::{ceil_count, Constants, EstimatorConfig};
use crate::error::{Error, Result};
use crate::report::{phases, Estimate, EstimateReport};
use crate::sequential::{drive, prefixed, Sequential};
use crate::stream::{Draw, SampleStream, StreamSource};

/// Which schedule of the two-phase estimator to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanVariant {
    /// `T1 = ceil(1/e)`, `T2 = ceil(1/e + v/e^2)` fresh samples.
    Basic,
    /// `T1 = ceil(1/e)`, `T2 = ceil(1/e + 5 v/e^2)` fresh samples.
    Optimized,
    /// `T1 = ceil(1 + 10/e)`, `T2 = max(ceil(60 v/e^2 - T1), 0)`, and the
    /// estimate averages both phases.
    Reuse,
}

impl MeanVariant {
    /// Bound on `E[(est - mean)^2] / eps^2`, when one is known.
    pub fn mse_factor(self) -> Option<f64> {
        match self {
            MeanVariant::Basic => Some(6.0),
            MeanVariant::Optimized => Some(2.58),
            MeanVariant::Reuse => None,
        }
    }

    fn t1(self, eps: f64) -> u64 {
        match self {
            MeanVariant::Basic | MeanVariant::Optimized => ceil_count(1.0 / eps).max(2),
            MeanVariant::Reuse => ceil_count(1.0 + 10.0 / eps),
        }
    }

    fn t2(self, eps: f64, var: f64, t1: u64) -> u64 {
        match self {
            MeanVariant::Basic => ceil_count(1.0 / eps + var / (eps * eps)),
            MeanVariant::Optimized => ceil_count(1.0 / eps + 5.0 * var / (eps * eps)),
            MeanVariant::Reuse => ceil_count(60.0 * var / (eps * eps) - t1 as f64),
        }
    }
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    #[inline]
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn sample_variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }
}

/// Phase quantities of one two-phase run, in rescaled [0, 1] units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanPhaseTrace {
    pub t1: u64,
    pub mu_tilde: f64,
    pub sigma_tilde_sq: f64,
    pub t2: u64,
    pub mu_hat: f64,
}

/// The two-phase mean estimator as a push-driven state machine.
#[derive(Debug, Clone)]
pub struct TwoPhaseMean {
    variant: MeanVariant,
    eps: f64,
    lo: f64,
    width: f64,
    t1: u64,
    first: Welford,
    second: Welford,
    t2: Option<u64>,
    trace: Option<MeanPhaseTrace>,
}

impl TwoPhaseMean {
    /// Estimator for values in `[lo, hi]` with additive target `eps`.
    pub fn new(variant: MeanVariant, eps: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Config(format!("range [{lo}, {hi}] must satisfy lo < hi")));
        }
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::Config(format!("eps must be > 0, got {eps}")));
        }
        let width = hi - lo;
        let eps = eps / width;
        Ok(TwoPhaseMean {
            variant,
            eps,
            lo,
            width,
            t1: variant.t1(eps),
            first: Welford::default(),
            second: Welford::default(),
            t2: None,
            trace: None,
        })
    }

    pub fn variant(&self) -> MeanVariant {
        self.variant
    }

    /// Available once the estimator has finished.
    pub fn trace(&self) -> Option<MeanPhaseTrace> {
        self.trace
    }

    fn estimate_unit(&self) -> f64 {
        match self.variant {
            MeanVariant::Reuse => self.first.mean,
            _ => self.second.mean,
        }
    }

    fn finish(&mut self) {
        let t2 = self.t2.unwrap_or(0);
        self.trace = Some(MeanPhaseTrace {
            t1: self.t1,
            mu_tilde: self.trace.map_or(self.first.mean, |t| t.mu_tilde),
            sigma_tilde_sq: self.trace.map_or(0.0, |t| t.sigma_tilde_sq),
            t2,
            mu_hat: self.estimate_unit(),
        });
    }
}

impl Sequential for TwoPhaseMean {
    type Output = f64;

    #[inline]
    fn push(&mut self, draw: &Draw<'_>) -> bool {
        if self.is_done() {
            return true;
        }
        let x = (draw.mean() - self.lo) / self.width;
        match self.t2 {
            None => {
                self.first.push(x);
                if self.first.n == self.t1 {
                    let var = self.first.sample_variance();
                    let t2 = self.variant.t2(self.eps, var, self.t1);
                    self.t2 = Some(t2);
                    self.trace = Some(MeanPhaseTrace {
                        t1: self.t1,
                        mu_tilde: self.first.mean,
                        sigma_tilde_sq: var,
                        t2,
                        mu_hat: f64::NAN,
                    });
                    if t2 == 0 {
                        self.finish();
                    }
                }
            }
            Some(t2) => {
                self.second.push(x);
                if self.variant == MeanVariant::Reuse {
                    self.first.push(x);
                }
                if self.second.n == t2 {
                    self.finish();
                }
            }
        }
        self.is_done()
    }

    fn is_done(&self) -> bool {
        self.t2.is_some_and(|t2| self.second.n >= t2)
    }

    fn output(&self) -> Option<f64> {
        self.is_done()
            .then(|| self.lo + self.width * self.estimate_unit())
    }

    fn partial(&self) -> Option<f64> {
        let m = if self.second.n > 0 {
            self.estimate_unit()
        } else if self.first.n > 0 {
            self.first.mean
        } else {
            return None;
        };
        Some(self.lo + self.width * m)
    }

    fn samples(&self) -> u64 {
        self.first.n.min(self.t1) + self.second.n
    }

    fn phase_counts(&self) -> Vec<(String, u64)> {
        phases([
            ("phase1", self.first.n.min(self.t1)),
            ("phase2", self.second.n),
        ])
    }
}

/// Report plus the phase trace of a single two-phase run.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanOutcome {
    pub report: EstimateReport,
    pub trace: Option<MeanPhaseTrace>,
}

fn run_variant<S: SampleStream + ?Sized>(
    stream: &mut S,
    cfg: &EstimatorConfig,
    variant: MeanVariant,
) -> Result<MeanOutcome> {
    cfg.validate()?;
    let (lo, hi) = stream.range();
    let mut est = TwoPhaseMean::new(variant, cfg.eps, lo, hi)?;
    let termination = drive(&mut est, stream, cfg.budget)?;
    let estimate = est.partial().unwrap_or(f64::NAN);
    let report = EstimateReport::new(
        Estimate::Scalar(estimate),
        est.phase_counts(),
        cfg.seed,
        termination,
    )
    .with_reads(stream.reads());
    Ok(MeanOutcome {
        report,
        trace: est.trace(),
    })
}

/// Two-phase mean: unbiased, RMSE at most `sqrt(6) eps`, expected samples
/// `var/eps'^2 + 2/eps'`.
pub fn two_phase_mean<S: SampleStream + ?Sized>(
    stream: &mut S,
    cfg: &EstimatorConfig,
) -> Result<MeanOutcome> {
    run_variant(stream, cfg, MeanVariant::Basic)
}

/// Optimized constants: RMSE at most `sqrt(2.58) eps`, expected samples
/// `5 var/eps'^2 + 2/eps'`.
pub fn two_phase_mean_opt<S: SampleStream + ?Sized>(
    stream: &mut S,
    cfg: &EstimatorConfig,
) -> Result<MeanOutcome> {
    run_variant(stream, cfg, MeanVariant::Optimized)
}

/// Sample-reusing variant: within `eps` with probability at least 1/4.
pub fn two_phase_mean_reuse<S: SampleStream + ?Sized>(
    stream: &mut S,
    cfg: &EstimatorConfig,
) -> Result<MeanOutcome> {
    run_variant(stream, cfg, MeanVariant::Reuse)
}

/// Base accuracy that makes one copy fail with probability at most 1/10 at
/// error `eps`: Chebyshev at `sqrt(10)` standard deviations of the RMSE
/// bound.
pub fn base_eps_for(variant: MeanVariant, eps: f64) -> Result<f64> {
    let factor = variant.mse_factor().ok_or_else(|| {
        Error::Config("the reuse variant has no RMSE bound and cannot be amplified".into())
    })?;
    Ok(eps / (10.0 * factor).sqrt())
}

/// Push-driven `(eps, delta)` mean estimator over `[lo, hi]`.
pub fn amplified_mean_estimator(
    variant: MeanVariant,
    eps: f64,
    delta: f64,
    lo: f64,
    hi: f64,
    constants: &Constants,
) -> Result<Amplified<TwoPhaseMean>> {
    let base = base_eps_for(variant, eps)?;
    let k = amplification_count(delta, constants.c_amp);
    let copy = TwoPhaseMean::new(variant, base, lo, hi)?;
    Ok(Amplified::new(vec![copy; k]))
}

/// Outcome of [`amplified_mean`], with per-copy sample counts.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplifiedMean {
    pub report: EstimateReport,
    pub k: usize,
    pub per_copy_samples: Vec<u64>,
}

/// `(eps, delta)`-correct mean: copies of the two-phase estimator at the
/// Chebyshev-converted accuracy, each on its own sub-stream, combined by
/// [`amplify`].
pub fn amplified_mean<Src: StreamSource>(
    source: &Src,
    cfg: &EstimatorConfig,
    variant: MeanVariant,
) -> Result<AmplifiedMean> {
    cfg.validate()?;
    let (lo, hi) = source.range();
    let copy = TwoPhaseMean::new(variant, base_eps_for(variant, cfg.eps)?, lo, hi)?;
    let out = amplify(source, cfg, |_| copy.clone())?;
    let report = EstimateReport::new(
        Estimate::Scalar(out.output.unwrap_or(f64::NAN)),
        out.phase_counts,
        cfg.seed,
        out.termination,
    )
    .with_reads(out.reads);
    Ok(AmplifiedMean {
        report,
        k: out.k,
        per_copy_samples: out.per_copy_samples,
    })
}

/// Randomized-rounding stopping rule: each draw becomes a coin with success
/// probability equal to its (scaled) value, and sampling stops after
/// `m = ceil(m_bern * ln(2/delta))` successes. Returns `m / T`.
#[derive(Debug, Clone)]
pub struct RoughMultiplicative {
    scale: f64,
    needed: u64,
    ones: u64,
    n: u64,
}

impl RoughMultiplicative {
    /// For values in `[0, hi]`.
    pub fn new(delta: f64, hi: f64, constants: &Constants) -> Result<Self> {
        if !(hi.is_finite() && hi > 0.0) {
            return Err(Error::Config(format!("upper bound must be > 0, got {hi}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Config(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(RoughMultiplicative {
            scale: hi,
            needed: ceil_count(constants.m_bern * (2.0 / delta).ln()).max(1),
            ones: 0,
            n: 0,
        })
    }

    /// Successes required before stopping.
    pub fn needed(&self) -> u64 {
        self.needed
    }
}

impl Sequential for RoughMultiplicative {
    type Output = f64;

    #[inline]
    fn push(&mut self, draw: &Draw<'_>) -> bool {
        if self.is_done() {
            return true;
        }
        self.n += 1;
        if draw.coin() < draw.mean() / self.scale {
            self.ones += 1;
        }
        self.is_done()
    }

    fn is_done(&self) -> bool {
        self.ones >= self.needed
    }

    fn output(&self) -> Option<f64> {
        self.is_done().then(|| self.partial()).flatten()
    }

    fn partial(&self) -> Option<f64> {
        (self.n > 0).then(|| self.scale * self.ones as f64 / self.n as f64)
    }

    fn samples(&self) -> u64 {
        self.n
    }

    fn phase_counts(&self) -> Vec<(String, u64)> {
        phases([("rough", self.n)])
    }
}

fn nonnegative_top<S: SampleStream + ?Sized>(stream: &S) -> Result<f64> {
    let (lo, hi) = stream.range();
    if lo < 0.0 || !(hi > 0.0) {
        return Err(Error::Precondition(format!(
            "multiplicative estimation needs values in [0, hi] with hi > 0, got [{lo}, {hi}]"
        )));
    }
    Ok(hi)
}

/// Factor-2 approximation of a positive mean: within `[mu/2, 2 mu]` with
/// probability `1 - delta`. Never stops on a zero mean; a bounded budget
/// turns that case into `BudgetExceeded`.
pub fn rough_multiplicative_mean<S: SampleStream + ?Sized>(
    stream: &mut S,
    cfg: &EstimatorConfig,
) -> Result<EstimateReport> {
    cfg.validate()?;
    let hi = nonnegative_top(stream)?;
    let mut est = RoughMultiplicative::new(cfg.delta, hi, &cfg.constants)?;
    let termination = drive(&mut est, stream, cfg.budget)?;
    Ok(EstimateReport::new(
        Estimate::Scalar(est.partial().unwrap_or(0.0)),
        est.phase_counts(),
        cfg.seed,
        termination,
    )
    .with_reads(stream.reads()))
}

/// Relative-error mean: a rough estimate at `delta/2`, then an amplified
/// additive estimate at `eps * rough / c_mult` and `delta/2`.
#[derive(Debug, Clone)]
pub struct MultiplicativeMean {
    rough: RoughMultiplicative,
    refine: Option<Amplified<TwoPhaseMean>>,
    variant: MeanVariant,
    eps: f64,
    delta: f64,
    hi: f64,
    constants: Constants,
}

impl MultiplicativeMean {
    pub fn new(eps: f64, delta: f64, hi: f64, constants: &Constants) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::Config(format!("eps must be > 0, got {eps}")));
        }
        Ok(MultiplicativeMean {
            rough: RoughMultiplicative::new(delta / 2.0, hi, constants)?,
            refine: None,
            variant: MeanVariant::Basic,
            eps,
            delta,
            hi,
            constants: *constants,
        })
    }

    /// The rough stage's estimate, once it has finished.
    pub fn rough_estimate(&self) -> Option<f64> {
        self.rough.output()
    }
}

impl Sequential for MultiplicativeMean {
    type Output = f64;

    fn push(&mut self, draw: &Draw<'_>) -> bool {
        if let Some(refine) = &mut self.refine {
            return refine.push(draw);
        }
        if self.rough.push(draw) {
            let rough = self.rough.output().expect("finished rough stage");
            let target = self.eps * rough / self.constants.c_mult;
            let refine = amplified_mean_estimator(
                self.variant,
                target,
                self.delta / 2.0,
                0.0,
                self.hi,
                &self.constants,
            )
            .expect("validated parameters");
            self.refine = Some(refine);
        }
        false
    }

    fn is_done(&self) -> bool {
        self.refine.as_ref().is_some_and(Sequential::is_done)
    }

    fn output(&self) -> Option<f64> {
        self.refine.as_ref().and_then(Sequential::output)
    }

    fn partial(&self) -> Option<f64> {
        self.refine
            .as_ref()
            .and_then(Sequential::partial)
            .or_else(|| self.rough.partial())
    }

    fn samples(&self) -> u64 {
        self.rough.samples() + self.refine.as_ref().map_or(0, Sequential::samples)
    }

    fn phase_counts(&self) -> Vec<(String, u64)> {
        let mut counts = self.rough.phase_counts();
        if let Some(refine) = &self.refine {
            counts.extend(prefixed("refine", refine.phase_counts()));
        }
        counts
    }
}

/// Report plus the rough stage's value.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicativeOutcome {
    pub report: EstimateReport,
    pub rough: Option<f64>,
}

/// Mean within relative error `eps` with probability `1 - delta`, for
/// values in `[0, hi]` with positive mean.
pub fn multiplicative_mean<S: SampleStream + ?Sized>(
    stream: &mut S,
    cfg: &EstimatorConfig,
) -> Result<MultiplicativeOutcome> {
    cfg.validate()?;
    let hi = nonnegative_top(stream)?;
    let mut est = MultiplicativeMean::new(cfg.eps, cfg.delta, hi, &cfg.constants)?;
    let termination = drive(&mut est, stream, cfg.budget)?;
    let report = EstimateReport::new(
        Estimate::Scalar(est.partial().unwrap_or(0.0)),
        est.phase_counts(),
        cfg.seed,
        termination,
    )
    .with_reads(stream.reads());
    Ok(MultiplicativeOutcome {
        report,
        rough: est.rough_estimate(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Budget;
    use crate::report::Termination;
    use crate::distributions::DistSpec;
    use crate::stream::make_stream;

    fn cfg(eps: f64, delta: f64, seed: u64) -> EstimatorConfig {
        EstimatorConfig::new(eps, delta, seed).unwrap()
    }

    fn spec(s: &str) -> DistSpec {
        s.parse().unwrap()
    }

    #[test]
    fn welford_matches_two_pass() {
        let xs = [0.1, 0.4, 0.4, 0.9, 0.0];
        let mut w = Welford::default();
        xs.iter().for_each(|&x| w.push(x));
        let m = xs.iter().sum::<f64>() / 5.0;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 4.0;
        assert!((w.mean - m).abs() < 1e-15);
        assert!((w.sample_variance() - v).abs() < 1e-15);
    }

    #[test]
    fn point_mass_basic() {
        let mut s = make_stream(&spec("point:0.5"), 3);
        let out = two_phase_mean(&mut s, &cfg(0.1, 0.1, 3)).unwrap();
        assert_eq!(out.report.value(), 0.5);
        assert_eq!(out.report.samples_used, 20);
        let t = out.trace.unwrap();
        assert_eq!((t.t1, t.t2, t.sigma_tilde_sq), (10, 10, 0.0));
        assert_eq!(out.report.termination, Termination::Converged);
    }

    #[test]
    fn point_mass_opt_and_reuse() {
        let mut s = make_stream(&spec("point:0.5"), 3);
        let out = two_phase_mean_opt(&mut s, &cfg(0.1, 0.1, 3)).unwrap();
        assert_eq!(out.report.samples_used, 20);
        let mut s = make_stream(&spec("point:0.25"), 3);
        let out = two_phase_mean_reuse(&mut s, &cfg(0.1, 0.1, 3)).unwrap();
        let t = out.trace.unwrap();
        assert_eq!((t.t1, t.t2), (101, 0));
        assert_eq!(out.report.value(), 0.25);
        assert_eq!(out.report.samples_used, 101);
    }

    #[test]
    fn t1_clamped_for_large_eps() {
        let mut s = make_stream(&spec("bernoulli:0.5"), 1);
        let out = two_phase_mean(&mut s, &cfg(5.0, 0.1, 1)).unwrap();
        assert_eq!(out.trace.unwrap().t1, 2);
    }

    #[test]
    fn t2_follows_formula() {
        for seed in 0..50 {
            let mut s = make_stream(&spec("bernoulli:0.3"), seed);
            let c = cfg(0.05, 0.1, seed);
            let t = two_phase_mean(&mut s, &c).unwrap().trace.unwrap();
            assert_eq!(t.t2, ceil_count(20.0 + t.sigma_tilde_sq / 0.0025));
            // unbiased variance of [0, 1] values: at most n / (4 (n - 1))
            assert!(t.sigma_tilde_sq <= 0.25 * 20.0 / 19.0 + 1e-9);
            let t = two_phase_mean_opt(&mut s, &c).unwrap().trace.unwrap();
            assert_eq!(t.t2, ceil_count(20.0 + 5.0 * t.sigma_tilde_sq / 0.0025));
            let t = two_phase_mean_reuse(&mut s, &c).unwrap().trace.unwrap();
            if t.sigma_tilde_sq <= 0.0025 * t.t1 as f64 / 60.0 {
                assert_eq!(t.t2, 0);
            }
        }
    }

    #[test]
    fn budget_stops_early() {
        let mut s = make_stream(&spec("bernoulli:0.3"), 1);
        let c = cfg(0.01, 0.1, 1).with_budget(Budget::Limit(5));
        let out = two_phase_mean(&mut s, &c).unwrap();
        assert_eq!(out.report.termination, Termination::BudgetExceeded);
        assert_eq!(out.report.samples_used, 5);
    }

    #[test]
    fn rough_point_masses() {
        let mut s = make_stream(&spec("point:1"), 0);
        let r = rough_multiplicative_mean(&mut s, &cfg(0.1, 0.1, 0)).unwrap();
        let m = ceil_count(48.0 * 20f64.ln());
        assert_eq!(r.value(), 1.0);
        assert_eq!(r.samples_used, m);
        let mut s = make_stream(&spec("point:0"), 0);
        let c = cfg(0.1, 0.1, 0).with_budget(Budget::Limit(1_000_000));
        let r = rough_multiplicative_mean(&mut s, &c).unwrap();
        assert_eq!(r.termination, Termination::BudgetExceeded);
        assert_eq!(r.samples_used, 1_000_000);
    }

    #[test]
    fn multiplicative_point_mass() {
        let mut s = make_stream(&spec("point:0.8"), 4);
        let out = multiplicative_mean(&mut s, &cfg(0.1, 0.1, 4)).unwrap();
        assert_eq!(out.report.value(), 0.8);
        let total: u64 = out.report.phase_counts.iter().map(|p| p.1).sum();
        assert_eq!(total, out.report.samples_used);
    }

    #[test]
    fn amplified_point_mass_and_counts() {
        let src = spec("point:0.5");
        let c = cfg(0.1, 0.01, 2);
        let out = amplified_mean(&src, &c, MeanVariant::Basic).unwrap();
        assert_eq!(out.report.value(), 0.5);
        assert_eq!(out.k, amplification_count(0.01, c.constants.c_amp));
        assert_eq!(
            out.per_copy_samples.iter().sum::<u64>(),
            out.report.samples_used
        );
        assert!(amplified_mean(&src, &c, MeanVariant::Reuse).is_err());
    }

    #[test]
    fn rescaling_invariance() {
        let unit = spec("bernoulli:0.3");
        let wide = spec("atoms:2=0.7,4=0.3");
        for seed in 0..20 {
            let c = cfg(0.05, 0.1, seed);
            let mut a = make_stream(&unit, seed);
            let mut b = make_stream(&wide, seed).with_range(2.0, 4.0).unwrap();
            let ra = two_phase_mean(&mut a, &c).unwrap().report;
            let cb = cfg(0.1, 0.1, seed);
            let rb = two_phase_mean(&mut b, &cb).unwrap().report;
            assert_eq!(ra.samples_used, rb.samples_used);
            assert!((2.0 + 2.0 * ra.value() - rb.value()).abs() < 1e-12);
        }
    }
}
