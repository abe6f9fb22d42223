use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Upper bound on the number of samples (or block reads) one estimator call
/// may consume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Budget {
    #[default]
    Unbounded,
    Limit(u64),
}

impl Budget {
    #[inline]
    pub fn allows(&self, used: u64) -> bool {
        match *self {
            Budget::Unbounded => true,
            Budget::Limit(limit) => used < limit,
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, Budget::Limit(_))
    }
}

impl FromStr for Budget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("unbounded") {
            return Ok(Budget::Unbounded);
        }
        match s.parse::<u64>() {
            Ok(n) if n > 0 => Ok(Budget::Limit(n)),
            _ => Err(Error::Config(format!(
                "budget must be a positive integer or `unbounded`, got `{s}`"
            ))),
        }
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Budget::Unbounded => f.write_str("unbounded"),
            Budget::Limit(n) => write!(f, "{n}"),
        }
    }
}

/// Tunable algorithm constants. All must be strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    /// Phase-1/phase-2 length multiplier of the three-phase quantile core,
    /// `T1 = ceil(c_t1 / accuracy)`.
    pub c_t1: f64,
    /// Phase-3 length multiplier, `T2 = ceil(c_t2 * (1/a + var/a^2))`.
    pub c_t2: f64,
    /// Amplification copies, `k = ceil(c_amp * ln(1/delta))`.
    pub c_amp: f64,
    /// Ones required by the rough multiplicative stopping rule,
    /// `m = ceil(m_bern * ln(2/delta))`.
    pub m_bern: f64,
    /// Size of the support-discovery prefix of the histogram learner.
    pub c_hist0: f64,
    /// Per-item failure scale of the histogram learner.
    pub c_delta: f64,
    /// Divisor turning a rough mean into an additive target,
    /// `eps' = eps * rough / c_mult`.
    pub c_mult: f64,
    /// Quantile offset of the two sub-calls per scale, as a fraction of the
    /// scale.
    pub quantile_offset: f64,
    /// Accuracy of the two sub-calls per scale, as a fraction of the scale.
    pub quantile_accuracy: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            c_t1: 10.0,
            c_t2: 4.0,
            c_amp: 3.0,
            m_bern: 48.0,
            c_hist0: 4.0,
            c_delta: 0.01,
            c_mult: 2.0,
            quantile_offset: 0.5,
            quantile_accuracy: 0.4,
        }
    }
}

impl Constants {
    pub const NAMES: [&'static str; 9] = [
        "c_t1",
        "c_t2",
        "c_amp",
        "m_bern",
        "c_hist0",
        "c_delta",
        "c_mult",
        "quantile_offset",
        "quantile_accuracy",
    ];

    fn slot(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "c_t1" => &mut self.c_t1,
            "c_t2" => &mut self.c_t2,
            "c_amp" => &mut self.c_amp,
            "m_bern" => &mut self.m_bern,
            "c_hist0" => &mut self.c_hist0,
            "c_delta" => &mut self.c_delta,
            "c_mult" => &mut self.c_mult,
            "quantile_offset" => &mut self.quantile_offset,
            "quantile_accuracy" => &mut self.quantile_accuracy,
            _ => return None,
        })
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        let mut copy = *self;
        copy.slot(name).map(|v| *v)
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = self
            .slot(name)
            .ok_or_else(|| Error::Config(format!("unknown constant `{name}`")))?;
        *slot = value;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for name in Self::NAMES {
            let v = self.get(name).unwrap_or(f64::NAN);
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!(
                    "constant `{name}` must be finite and > 0, got {v}"
                )));
            }
        }
        if self.quantile_accuracy >= self.quantile_offset {
            return Err(Error::Config(
                "quantile_accuracy must be smaller than quantile_offset".into(),
            ));
        }
        if self.quantile_offset + self.quantile_accuracy >= 1.0 {
            return Err(Error::Config(
                "quantile_offset + quantile_accuracy must be below 1".into(),
            ));
        }
        Ok(())
    }

    /// Applies `key = value` overrides, one per line. Blank lines and lines
    /// starting with `#` are ignored. Keys other than constants (`eps`,
    /// `delta`, `seed`, `budget`) are rejected here; see
    /// [`EstimatorConfig::apply_overrides`].
    pub fn apply_overrides(&mut self, text: &str) -> Result<()> {
        for (key, value) in parse_key_values(text)? {
            let v: f64 = value
                .parse()
                .map_err(|_| Error::Config(format!("`{key}`: not a number: `{value}`")))?;
            self.set(&key, v)?;
        }
        self.validate()
    }
}

pub(crate) fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Target error, failure probability, constants, seed and sample budget.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub eps: f64,
    pub delta: f64,
    pub constants: Constants,
    pub seed: u64,
    pub budget: Budget,
}

impl EstimatorConfig {
    pub fn new(eps: f64, delta: f64, seed: u64) -> Result<Self> {
        let cfg = EstimatorConfig {
            eps,
            delta,
            constants: Constants::default(),
            seed,
            budget: Budget::Unbounded,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_constants(mut self, constants: Constants) -> Self {
        self.constants = constants;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(Error::Config(format!("eps must be > 0, got {}", self.eps)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if let Budget::Limit(0) = self.budget {
            return Err(Error::Config("budget must be positive".into()));
        }
        self.constants.validate()
    }

    /// Applies a `key = value` config file: any constant name plus `eps`,
    /// `delta`, `seed` and `budget`.
    pub fn apply_overrides(&mut self, text: &str) -> Result<()> {
        for (key, value) in parse_key_values(text)? {
            let bad = |what: &str| Error::Config(format!("`{key}`: {what}: `{value}`"));
            match key.as_str() {
                "eps" => self.eps = value.parse().map_err(|_| bad("not a number"))?,
                "delta" => self.delta = value.parse().map_err(|_| bad("not a number"))?,
                "seed" => self.seed = value.parse().map_err(|_| bad("not a u64"))?,
                "budget" => self.budget = value.parse()?,
                _ => {
                    let v = value.parse().map_err(|_| bad("not a number"))?;
                    self.constants.set(&key, v)?;
                }
            }
        }
        self.validate()
    }
}

/// Rounds a sample count up, ignoring floating-point noise below 1e-9
/// relative so that e.g. `1/0.1` gives 10 rather than 11.
pub fn ceil_count(x: f64) -> u64 {
    if !(x > 0.0) {
        return 0;
    }
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r as u64
    } else {
        x.ceil() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_eps_and_delta() {
        assert!(EstimatorConfig::new(0.0, 0.1, 1).is_err());
        assert!(EstimatorConfig::new(-1.0, 0.1, 1).is_err());
        assert!(EstimatorConfig::new(0.1, 0.0, 1).is_err());
        assert!(EstimatorConfig::new(0.1, 1.0, 1).is_err());
        assert!(EstimatorConfig::new(0.1, 0.5, 1).is_ok());
    }

    #[test]
    fn constants_must_be_positive() {
        let mut c = Constants::default();
        assert!(c.set("c_amp", 0.0).is_ok());
        assert!(c.validate().is_err());
        assert!(c.set("nope", 1.0).is_err());
    }

    #[test]
    fn quantile_fractions_checked() {
        let mut c = Constants::default();
        c.quantile_accuracy = 0.6;
        assert!(c.validate().is_err());
        c.quantile_accuracy = 0.1;
        c.quantile_offset = 0.95;
        assert!(c.validate().is_err());
    }

    #[test]
    fn overrides_file() {
        let mut cfg = EstimatorConfig::new(0.1, 0.1, 0).unwrap();
        cfg.apply_overrides("# comment\nc_amp = 18\n\nseed=9\nbudget = 1000\n")
            .unwrap();
        assert_eq!(cfg.constants.c_amp, 18.0);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.budget, Budget::Limit(1000));
        assert!(cfg.apply_overrides("c_amp 3").is_err());
        assert!(cfg.apply_overrides("delta = 2").is_err());
    }

    #[test]
    fn budget_parse() {
        assert_eq!("unbounded".parse::<Budget>().unwrap(), Budget::Unbounded);
        assert_eq!("12".parse::<Budget>().unwrap(), Budget::Limit(12));
        assert!("0".parse::<Budget>().is_err());
        assert!(Budget::Limit(3).allows(2));
        assert!(!Budget::Limit(3).allows(3));
    }

    #[test]
    fn ceil_count_tolerates_noise() {
        assert_eq!(ceil_count(1.0 / 0.1), 10);
        assert_eq!(ceil_count(10.000_000_000_001), 10);
        assert_eq!(ceil_count(10.01), 11);
        assert_eq!(ceil_count(18.0 * (100f64).ln()), 83);
        assert_eq!(ceil_count(0.0), 0);
        assert_eq!(ceil_count(-3.0), 0);
    }
}
