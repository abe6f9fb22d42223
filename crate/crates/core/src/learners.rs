//! Learning a distribution in sup-norm over a small alphabet, and in
//! Kolmogorov-Smirnov distance via a grid of quantiles.
//!
//! Both learners run many sub-estimators on one shared stream in lockstep:
//! each draw is offered to every sub-estimator that is still running, so
//! the total number of draws is the largest individual demand rather than
//! the sum.

use crate::amplify::Amplified;
use crate::augmented::AugmentedValue;
use crate::config::{ceil_count, EstimatorConfig};
use crate::distributions::FiniteDistribution;
use crate::error::{Error, Result};
use crate::mean::{amplified_mean_estimator, MeanVariant, TwoPhaseMean};
use crate::quantile::InstanceOptimalQuantile;
use crate::report::{phases, Estimate, EstimateReport, Termination};
use crate::sequential::Sequential;
use crate::stream::{Draw, SampleStream};

/// Per-item probability estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnedHistogram {
    /// `estimates[j]` for items `0..s`; zero outside `j_large`.
    pub estimates: Vec<f64>,
    /// Items seen with empirical mass at least `eps/2` in some prefix draw.
    pub j_large: Vec<usize>,
    pub t0: u64,
    /// Draws each per-item estimator consumed, aligned with `j_large`.
    pub per_item_samples: Vec<u64>,
}

impl LearnedHistogram {
    /// Largest absolute error against known item probabilities.
    pub fn linf_error(&self, truth: &[f64]) -> f64 {
        (0..self.estimates.len().max(truth.len()))
            .map(|j| {
                let a = self.estimates.get(j).copied().unwrap_or(0.0);
                let b = truth.get(j).copied().unwrap_or(0.0);
                (a - b).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Size of the support-discovery prefix,
/// `ceil(c_hist0 * (1/eps) * ln(1/(eps delta)))`.
pub fn histogram_prefix(eps: f64, delta: f64, c_hist0: f64) -> u64 {
    ceil_count(c_hist0 / eps * (1.0 / (eps * delta)).ln()).max(1)
}

/// Failure probability of each per-item estimator,
/// `c_delta * eps^3 * delta / ln(1/(eps delta))`.
pub fn per_item_delta(eps: f64, delta: f64, c_delta: f64) -> f64 {
    let d = c_delta * eps.powi(3) * delta / (1.0 / (eps * delta)).ln().max(1.0);
    d.min(0.5)
}

/// Empirical item distribution of a draw over items `0..s`.
fn item_masses(draw: &Draw<'_>, s: usize, out: &mut Vec<(usize, f64)>) -> Result<()> {
    out.clear();
    let inv = 1.0 / draw.len() as f64;
    for &(v, c) in draw.runs() {
        if !(v >= 0.0 && v.fract() == 0.0 && (v as usize) < s) {
            return Err(Error::Input(format!(
                "item {v} is not an integer in 0..{s}"
            )));
        }
        out.push((v as usize, c as f64 * inv));
    }
    let total: f64 = out.iter().map(|p| p.1).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Input(format!("item masses sum to {total}")));
    }
    Ok(())
}

/// Outcome of [`learn_linf`].
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramOutcome {
    pub report: EstimateReport,
    pub histogram: LearnedHistogram,
}

/// Learns every item probability of the mixture to within `eps` in
/// sup-norm with probability `1 - delta`. Values of each draw are item
/// indices `0..s`; a block contributes its empirical distribution.
pub fn learn_linf<S: SampleStream + ?Sized>(
    stream: &mut S,
    s: usize,
    cfg: &EstimatorConfig,
) -> Result<HistogramOutcome> {
    cfg.validate()?;
    if s == 0 {
        return Err(Error::Config("alphabet size must be positive".into()));
    }
    let (eps, delta) = (cfg.eps, cfg.delta);
    let c = &cfg.constants;
    let t0 = histogram_prefix(eps, delta, c.c_hist0);
    let mut masses = Vec::new();
    let mut large = vec![false; s];
    let mut used = 0u64;
    let mut termination = Termination::Converged;
    while used < t0 {
        if !cfg.budget.allows(used) {
            termination = Termination::BudgetExceeded;
            break;
        }
        let draw = stream.next_draw()?;
        used += 1;
        item_masses(&draw, s, &mut masses)?;
        for &(j, p) in &masses {
            if p >= eps / 2.0 {
                large[j] = true;
            }
        }
    }
    let j_large: Vec<usize> = (0..s).filter(|&j| large[j]).collect();
    let item_delta = per_item_delta(eps, delta, c.c_delta);
    let mut estimators = j_large
        .iter()
        .map(|_| amplified_mean_estimator(MeanVariant::Basic, eps, item_delta, 0.0, 1.0, c))
        .collect::<Result<Vec<Amplified<TwoPhaseMean>>>>()?;
    let mut slot = vec![usize::MAX; s];
    for (i, &j) in j_large.iter().enumerate() {
        slot[j] = i;
    }
    let mut shared = 0u64;
    let mut point = vec![0.0; j_large.len()];
    while termination == Termination::Converged && estimators.iter().any(|e| !e.is_done()) {
        if !cfg.budget.allows(used + shared) {
            termination = Termination::BudgetExceeded;
            break;
        }
        let draw = stream.next_draw()?;
        shared += 1;
        item_masses(&draw, s, &mut masses)?;
        point.iter_mut().for_each(|p| *p = 0.0);
        for &(j, p) in &masses {
            if slot[j] != usize::MAX {
                point[slot[j]] = p;
            }
        }
        for (i, est) in estimators.iter_mut().enumerate() {
            if !est.is_done() {
                let value = [point[i]];
                est.push(&Draw::new(draw.index(), draw.key(), &value));
            }
        }
    }
    let mut estimates = vec![0.0; s];
    for (i, &j) in j_large.iter().enumerate() {
        estimates[j] = estimators[i].partial().unwrap_or(0.0).clamp(0.0, 1.0);
    }
    let histogram = LearnedHistogram {
        estimates,
        j_large,
        t0,
        per_item_samples: estimators.iter().map(Sequential::samples).collect(),
    };
    let report = EstimateReport::new(
        Estimate::Scalar(histogram.estimates.iter().copied().fold(0.0, f64::max)),
        phases([("prefix", used), ("lockstep", shared)]),
        cfg.seed,
        termination,
    )
    .with_reads(stream.reads());
    Ok(HistogramOutcome { report, histogram })
}

/// Uniform distribution over the learned quantile points.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnedCdf {
    pub levels: Vec<f64>,
    /// One estimate per level, sorted.
    pub points: Vec<AugmentedValue>,
}

impl LearnedCdf {
    /// Right-continuous step CDF: fraction of points with value `<= x`.
    pub fn cdf(&self, x: f64) -> f64 {
        let n = self.points.partition_point(|p| p.value <= x);
        n as f64 / self.points.len() as f64
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }
}

/// Grid levels `k eps/3` for `k = 1..ceil(3/eps)`, the last one being 1.
pub fn ks_levels(eps: f64) -> Vec<f64> {
    let n = ceil_count(3.0 / eps).max(1);
    (1..=n)
        .map(|k| if k == n { 1.0 } else { (k as f64 * eps / 3.0).min(1.0) })
        .collect()
}

/// Outcome of [`learn_ks`].
#[derive(Debug, Clone, PartialEq)]
pub struct CdfOutcome {
    pub report: EstimateReport,
    pub cdf: LearnedCdf,
    /// Draws each level consumed, aligned with `cdf.levels`.
    pub per_level_samples: Vec<u64>,
}

/// Learns the mixture to within `eps` in Kolmogorov-Smirnov distance with
/// probability `1 - delta`: one multi-scale quantile search per grid level
/// at accuracy `eps/10` and failure `eps delta / 3`.
pub fn learn_ks<S: SampleStream + ?Sized>(
    stream: &mut S,
    cfg: &EstimatorConfig,
) -> Result<CdfOutcome> {
    cfg.validate()?;
    let levels = ks_levels(cfg.eps);
    let mut searches = levels
        .iter()
        .map(|&q| {
            InstanceOptimalQuantile::new(
                q,
                cfg.eps / 10.0,
                (cfg.eps * cfg.delta / 3.0).min(0.5),
                &cfg.constants,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut shared = 0u64;
    let mut termination = Termination::Converged;
    let mut active: Vec<usize> = (0..searches.len()).filter(|&i| !searches[i].is_done()).collect();
    while !active.is_empty() {
        if !cfg.budget.allows(shared) {
            termination = Termination::BudgetExceeded;
            break;
        }
        let draw = stream.next_draw()?;
        shared += 1;
        active.retain(|&i| !searches[i].push(&draw));
    }
    let mut points: Vec<AugmentedValue> = searches
        .iter()
        .map(|e| e.partial().unwrap_or(AugmentedValue::new(f64::NAN, 0.0)))
        .collect();
    points.sort();
    let cdf = LearnedCdf { levels, points };
    let median = cdf.points[(cdf.points.len() - 1) / 2];
    let report = EstimateReport::new(
        Estimate::Augmented(median),
        phases([("lockstep", shared)]),
        cfg.seed,
        termination,
    )
    .with_reads(stream.reads());
    Ok(CdfOutcome {
        report,
        cdf,
        per_level_samples: searches.iter().map(Sequential::samples).collect(),
    })
}

/// Exact KS distance between the learned CDF and a finite distribution:
/// the largest CDF gap over the union of both sets of jump points.
pub fn ks_distance(learned: &LearnedCdf, oracle: &FiniteDistribution) -> f64 {
    learned
        .points
        .iter()
        .map(|p| p.value)
        .chain(oracle.values().iter().copied())
        .map(|t| (learned.cdf(t) - oracle.cdf_plus(t)).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::DistSpec;
    use crate::stream::make_stream;

    fn cdf_of(values: &[f64]) -> LearnedCdf {
        let mut points: Vec<AugmentedValue> =
            values.iter().map(|&v| AugmentedValue::new(v, 0.5)).collect();
        points.sort();
        LearnedCdf {
            levels: vec![0.0; values.len()],
            points,
        }
    }

    #[test]
    fn ks_examples() {
        let zero = FiniteDistribution::point(0.0);
        assert_eq!(ks_distance(&cdf_of(&[0.0]), &zero), 0.0);
        assert_eq!(ks_distance(&cdf_of(&[1.0]), &zero), 1.0);
        assert_eq!(ks_distance(&cdf_of(&[0.0, 1.0]), &zero), 0.5);
    }

    #[test]
    fn grid_levels() {
        let levels = ks_levels(0.2);
        assert_eq!(levels.len(), 15);
        assert!((levels[0] - 0.2 / 3.0).abs() < 1e-15);
        assert_eq!(*levels.last().unwrap(), 1.0);
    }

    #[test]
    fn constant_histogram_is_exact() {
        let spec = DistSpec::Blocks(
            crate::distributions::BlockMixtureSpec::new(2, vec![(1.0, vec![0.0, 1.0])]).unwrap(),
        );
        let mut s = make_stream(&spec, 3);
        let cfg = EstimatorConfig::new(0.1, 0.1, 3).unwrap();
        let out = learn_linf(&mut s, 2, &cfg).unwrap();
        assert_eq!(out.histogram.estimates, vec![0.5, 0.5]);
        assert_eq!(out.histogram.j_large, vec![0, 1]);
    }

    #[test]
    fn histogram_rejects_non_items() {
        let mut s = make_stream(&"point:0.5".parse().unwrap(), 0);
        let cfg = EstimatorConfig::new(0.1, 0.1, 0).unwrap();
        assert!(matches!(learn_linf(&mut s, 2, &cfg), Err(Error::Input(_))));
        let mut s = make_stream(&"point:3".parse().unwrap(), 0);
        assert!(learn_linf(&mut s, 2, &cfg).is_err());
    }

    #[test]
    fn point_mass_cdf() {
        let mut s = make_stream(&"point:0".parse().unwrap(), 0);
        let cfg = EstimatorConfig::new(0.2, 0.2, 0).unwrap();
        let out = learn_ks(&mut s, &cfg).unwrap();
        assert!(out.cdf.points.iter().all(|p| p.value == 0.0));
        assert_eq!(ks_distance(&out.cdf, &FiniteDistribution::point(0.0)), 0.0);
        assert_eq!(out.cdf.cdf(-1.0), 0.0);
        assert_eq!(out.cdf.cdf(0.0), 1.0);
    }
}
