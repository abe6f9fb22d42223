use std::fmt;

use crate::augmented::AugmentedValue;

/// Why an estimator stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    /// Ran its full schedule.
    Converged,
    /// Stopped before the last scale because the answer was certified.
    EarlyStopped,
    /// Hit the configured sample budget; the estimate is partial.
    BudgetExceeded,
    /// Fell back to reading the whole input; the answer is exact.
    FullScan,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::EarlyStopped => "early-stopped",
            Termination::BudgetExceeded => "budget-exceeded",
            Termination::FullScan => "full-scan",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimate {
    Scalar(f64),
    Augmented(AugmentedValue),
}

impl Estimate {
    /// The real-valued answer (first coordinate for augmented estimates).
    pub fn value(&self) -> f64 {
        match *self {
            Estimate::Scalar(v) => v,
            Estimate::Augmented(a) => a.value,
        }
    }
}

impl fmt::Display for Estimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Estimate::Scalar(v) => write!(f, "{v}"),
            Estimate::Augmented(a) => write!(f, "{a}"),
        }
    }
}

/// Outcome of one estimator run.
///
/// `samples_used` is always the sum of `phase_counts`; the constructor
/// enforces it.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub estimate: Estimate,
    pub samples_used: u64,
    pub phase_counts: Vec<(String, u64)>,
    pub reads: u64,
    pub seed: u64,
    pub termination: Termination,
}

impl EstimateReport {
    pub fn new(
        estimate: Estimate,
        phase_counts: Vec<(String, u64)>,
        seed: u64,
        termination: Termination,
    ) -> Self {
        let samples_used = phase_counts.iter().map(|(_, n)| n).sum();
        EstimateReport {
            estimate,
            samples_used,
            phase_counts,
            reads: 0,
            seed,
            termination,
        }
    }

    pub fn with_reads(mut self, reads: u64) -> Self {
        self.reads = reads;
        self
    }

    pub fn value(&self) -> f64 {
        self.estimate.value()
    }
}

pub(crate) fn phases<const N: usize>(items: [(&str, u64); N]) -> Vec<(String, u64)> {
    items.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}
