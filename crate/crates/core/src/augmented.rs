use std::cmp::Ordering;
use std::fmt;

/// A value paired with a uniform tag in [0, 1], ordered lexicographically.
///
/// Augmenting every sample with an independent tag turns any distribution
/// into one without atoms, so every quantile is attained by a unique point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentedValue {
    pub value: f64,
    pub tag: f64,
}

impl AugmentedValue {
    pub fn new(value: f64, tag: f64) -> Self {
        AugmentedValue { value, tag }
    }

    #[inline]
    pub fn total_cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then_with(|| self.tag.total_cmp(&other.tag))
    }
}

impl Eq for AugmentedValue {}

impl PartialOrd for AugmentedValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for AugmentedValue {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_cmp(other)
    }
}

impl fmt::Display for AugmentedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.value, self.tag)
    }
}

/// Outputs of monotonic estimation problems: totally ordered, so the median
/// of several independent runs is well defined.
pub trait Monotone: Clone {
    fn order(&self, other: &Self) -> Ordering;
}

impl Monotone for f64 {
    fn order(&self, other: &Self) -> Ordering {
        self.total_cmp(other)
    }
}

impl Monotone for AugmentedValue {
    fn order(&self, other: &Self) -> Ordering {
        self.total_cmp(other)
    }
}
