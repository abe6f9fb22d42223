//! Push-driven estimators and the loop that feeds them.
//!
//! Estimators never pull from a stream themselves. A driver hands them one
//! draw at a time, which lets composite estimators (amplification, the
//! multi-scale quantile search, the learners) route a single stream to many
//! sub-estimators deterministically.

use crate::config::Budget;
use crate::error::Result;
use crate::report::Termination;
use crate::stream::{Draw, SampleStream};

pub trait Sequential {
    type Output: Clone;

    /// Consumes one draw. Returns `true` once the estimator has finished;
    /// draws pushed after that are ignored.
    fn push(&mut self, draw: &Draw<'_>) -> bool;

    fn is_done(&self) -> bool;

    /// Final answer, available once done.
    fn output(&self) -> Option<Self::Output>;

    /// Best answer so far; used for budget-exceeded reports.
    fn partial(&self) -> Option<Self::Output> {
        self.output()
    }

    /// Draws consumed so far.
    fn samples(&self) -> u64;

    /// Draws consumed per phase; sums to [`Sequential::samples`].
    fn phase_counts(&self) -> Vec<(String, u64)>;

    /// How a finished estimator stopped.
    fn termination(&self) -> Termination {
        Termination::Converged
    }
}

/// Feeds `est` from `stream` until it finishes or the budget is spent.
/// Returns the termination reason.
pub fn drive<E, S>(est: &mut E, stream: &mut S, budget: Budget) -> Result<Termination>
where
    E: Sequential + ?Sized,
    S: SampleStream + ?Sized,
{
    while !est.is_done() {
        if !budget.allows(est.samples()) {
            return Ok(Termination::BudgetExceeded);
        }
        let draw = stream.next_draw()?;
        est.push(&draw);
    }
    Ok(est.termination())
}

/// Sums phase counts by label, keeping first-seen label order.
pub(crate) fn merge_phase_counts(
    parts: impl IntoIterator<Item = (String, u64)>,
) -> Vec<(String, u64)> {
    let mut out: Vec<(String, u64)> = Vec::new();
    for (label, n) in parts {
        match out.iter_mut().find(|(l, _)| *l == label) {
            Some((_, total)) => *total += n,
            None => out.push((label, n)),
        }
    }
    out
}

/// Prefixes every label with `prefix.`.
pub(crate) fn prefixed(prefix: &str, counts: Vec<(String, u64)>) -> Vec<(String, u64)> {
    counts
        .into_iter()
        .map(|(l, n)| (format!("{prefix}.{l}"), n))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_keeps_order() {
        let merged = merge_phase_counts(vec![
            ("b".to_string(), 1),
            ("a".to_string(), 2),
            ("b".to_string(), 3),
        ]);
        assert_eq!(merged, vec![("b".to_string(), 4), ("a".to_string(), 2)]);
    }
}
