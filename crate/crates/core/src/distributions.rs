//! Synthetic distributions with exact analytic oracles, block mixtures, the
//! mean lower-bound tilt, and deterministic pseudo-text corpora.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::augmented::AugmentedValue;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Tolerance on algebraic identities (probability sums, shifted means).
pub const EXACT_TOL: f64 = 1e-12;

/// Finite-support distribution over the reals.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDistribution {
    values: Vec<f64>,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
    mean: f64,
    variance: f64,
}

impl FiniteDistribution {
    /// Builds a distribution from `(value, probability)` atoms. Atoms are
    /// sorted and equal values merged; probabilities in `[-1e-12, 0)` are
    /// clamped to zero.
    pub fn new(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut atoms: Vec<(f64, f64)> = atoms.into_iter().collect();
        if atoms.is_empty() {
            return Err(Error::Input("distribution needs at least one atom".into()));
        }
        for &(v, p) in &atoms {
            if !v.is_finite() || !p.is_finite() || p < -EXACT_TOL {
                return Err(Error::Input(format!("invalid atom ({v}, {p})")));
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut values = Vec::with_capacity(atoms.len());
        let mut probs: Vec<f64> = Vec::with_capacity(atoms.len());
        for (v, p) in atoms {
            // -0.0 and 0.0 are one value
            let v = v + 0.0;
            let p = p.max(0.0);
            if values.last() == Some(&v) {
                *probs.last_mut().unwrap() += p;
            } else {
                values.push(v);
                probs.push(p);
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > EXACT_TOL {
            return Err(Error::Input(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cumulative.push(acc);
        }
        let mean = values.iter().zip(&probs).map(|(v, p)| v * p).sum::<f64>();
        let variance = values
            .iter()
            .zip(&probs)
            .map(|(v, p)| p * (v - mean) * (v - mean))
            .sum::<f64>();
        Ok(FiniteDistribution {
            values,
            probs,
            cumulative,
            mean,
            variance,
        })
    }

    pub fn point(value: f64) -> Self {
        Self::new([(value, 1.0)]).expect("point mass is valid")
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Input(format!("bernoulli parameter {p} outside [0, 1]")));
        }
        Self::new([(0.0, 1.0 - p), (1.0, p)])
    }

    /// Uniform over the integers `lo..=hi`.
    pub fn uniform_ints(lo: i64, hi: i64) -> Result<Self> {
        if hi < lo {
            return Err(Error::Input(format!("empty integer range {lo}..{hi}")));
        }
        let n = (hi - lo + 1) as f64;
        Self::new((lo..=hi).map(|v| (v as f64, 1.0 / n)))
    }

    /// Uniform over `n` equally spaced points `i / (n - 1)` in [0, 1].
    pub fn grid(n: usize) -> Result<Self> {
        match n {
            0 => Err(Error::Input("grid needs at least one point".into())),
            1 => Ok(Self::point(0.0)),
            _ => Self::new((0..n).map(|i| (i as f64 / (n - 1) as f64, 1.0 / n as f64))),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// `P[X < x]`.
    pub fn cdf_minus(&self, x: f64) -> f64 {
        let i = self.values.partition_point(|&v| v < x);
        if i == 0 {
            0.0
        } else {
            self.cumulative[i - 1]
        }
    }

    /// `P[X <= x]`.
    pub fn cdf_plus(&self, x: f64) -> f64 {
        let i = self.values.partition_point(|&v| v <= x);
        if i == 0 {
            0.0
        } else {
            self.cumulative[i - 1]
        }
    }

    /// Inverse-CDF sampling from a uniform in [0, 1).
    #[inline]
    pub fn sample_with(&self, u: f64) -> f64 {
        let i = self.cumulative.partition_point(|&c| c <= u);
        self.values[i.min(self.values.len() - 1)]
    }

    /// `inf { x : P[X <= x] >= q }`.
    pub fn quantile(&self, q: f64) -> f64 {
        let i = self.cumulative.partition_point(|&c| c < q - EXACT_TOL);
        self.values[i.min(self.values.len() - 1)]
    }

    /// Quantile of the augmented distribution `D x Unif[0,1]`: the value is
    /// the ordinary quantile and the tag locates `q` inside that atom's mass.
    pub fn augmented_quantile(&self, q: f64) -> AugmentedValue {
        let i = self
            .cumulative
            .partition_point(|&c| c < q - EXACT_TOL)
            .min(self.values.len() - 1);
        let below = if i == 0 { 0.0 } else { self.cumulative[i - 1] };
        let mass = self.probs[i];
        let tag = if mass > 0.0 {
            ((q - below) / mass).clamp(0.0, 1.0)
        } else {
            1.0
        };
        AugmentedValue::new(self.values[i], tag)
    }

    /// Spec-string form, `atoms:v=p,...`.
    pub fn to_spec(&self) -> String {
        let body: Vec<String> = self.atoms().map(|(v, p)| format!("{v}={p}")).collect();
        format!("atoms:{}", body.join(","))
    }
}

/// Mixture of fixed blocks: draw a component by weight, observe all of its
/// `block_size` values.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMixtureSpec {
    block_size: usize,
    weights: Vec<f64>,
    blocks: Vec<Vec<f64>>,
    cumulative: Vec<f64>,
}

impl BlockMixtureSpec {
    pub fn new(block_size: usize, components: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::Input("block size must be at least 1".into()));
        }
        if components.is_empty() {
            return Err(Error::Input("mixture needs at least one component".into()));
        }
        let mut weights = Vec::with_capacity(components.len());
        let mut blocks = Vec::with_capacity(components.len());
        for (w, block) in components {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::Input(format!("invalid mixture weight {w}")));
            }
            if block.len() != block_size {
                return Err(Error::Input(format!(
                    "block has {} elements, expected {block_size}",
                    block.len()
                )));
            }
            if block.iter().any(|v| !v.is_finite()) {
                return Err(Error::Input("block values must be finite".into()));
            }
            weights.push(w);
            blocks.push(block);
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > EXACT_TOL {
            return Err(Error::Input(format!("mixture weights sum to {total}")));
        }
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            acc += w;
            cumulative.push(acc);
        }
        Ok(BlockMixtureSpec {
            block_size,
            weights,
            blocks,
            cumulative,
        })
    }

    /// Each atom of `d` becomes a single-element block.
    pub fn from_distribution(d: &FiniteDistribution) -> Self {
        let components = d.atoms().map(|(v, p)| (p, vec![v])).collect();
        Self::new(1, components).expect("atoms of a valid distribution")
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn components(&self) -> impl Iterator<Item = (f64, &[f64])> {
        self.weights
            .iter()
            .copied()
            .zip(self.blocks.iter().map(Vec::as_slice))
    }

    /// Component picked by inverse CDF on the weights.
    #[inline]
    pub fn block_with(&self, u: f64) -> &[f64] {
        let i = self.cumulative.partition_point(|&c| c <= u);
        &self.blocks[i.min(self.blocks.len() - 1)]
    }

    /// The mixture `M(D)`: element distribution of a random block.
    pub fn mixture(&self) -> FiniteDistribution {
        let b = self.block_size as f64;
        let atoms = self
            .components()
            .flat_map(|(w, block)| block.iter().map(move |&v| (v, w / b)));
        FiniteDistribution::new(atoms).expect("mixture of valid blocks")
    }

    /// Variance of the block means.
    pub fn block_mean_variance(&self) -> f64 {
        let means: Vec<f64> = self
            .blocks
            .iter()
            .map(|b| b.iter().sum::<f64>() / b.len() as f64)
            .collect();
        let mu: f64 = self.weights.iter().zip(&means).map(|(w, m)| w * m).sum();
        self.weights
            .iter()
            .zip(&means)
            .map(|(w, m)| w * (m - mu) * (m - mu))
            .sum()
    }

    pub fn quantile(&self, q: f64) -> f64 {
        self.mixture().quantile(q)
    }
}

/// Either kind of synthetic source.
#[derive(Debug, Clone, PartialEq)]
pub enum DistSpec {
    Finite(FiniteDistribution),
    Blocks(BlockMixtureSpec),
}

impl DistSpec {
    pub fn as_mixture(&self) -> BlockMixtureSpec {
        match self {
            DistSpec::Finite(d) => BlockMixtureSpec::from_distribution(d),
            DistSpec::Blocks(m) => m.clone(),
        }
    }

    /// Element distribution (the mixture for block sources).
    pub fn element_distribution(&self) -> FiniteDistribution {
        match self {
            DistSpec::Finite(d) => d.clone(),
            DistSpec::Blocks(m) => m.mixture(),
        }
    }

    /// Support bounds of the element values.
    pub fn range(&self) -> (f64, f64) {
        let d = self.element_distribution();
        (d.min(), d.max())
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Config(format!("not a number: `{s}`")))
}

impl FromStr for DistSpec {
    type Err = Error;

    /// Grammar:
    ///
    /// ```text
    /// point:V | bernoulli:P | uniform:A..B | grid:N
    /// atoms:V=P,V=P,...
    /// blocks:W@V/V/V+W@V/V/V...      (every block the same length)
    /// ```
    fn from_str(s: &str) -> Result<Self> {
        let (kind, body) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("distribution spec `{s}` lacks `kind:`")))?;
        let finite = match kind.trim() {
            "point" => FiniteDistribution::point(parse_f64(body)?),
            "bernoulli" => FiniteDistribution::bernoulli(parse_f64(body)?)?,
            "uniform" => {
                let (a, b) = body
                    .split_once("..")
                    .ok_or_else(|| Error::Config("uniform needs `A..B`".into()))?;
                let a = a.trim().parse().map_err(|_| Error::Config(format!("bad bound `{a}`")))?;
                let b = b.trim().parse().map_err(|_| Error::Config(format!("bad bound `{b}`")))?;
                FiniteDistribution::uniform_ints(a, b)?
            }
            "grid" => {
                let n = body
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad grid size `{body}`")))?;
                FiniteDistribution::grid(n)?
            }
            "atoms" => {
                let mut atoms = Vec::new();
                for item in body.split(',').filter(|t| !t.trim().is_empty()) {
                    let (v, p) = item
                        .split_once('=')
                        .ok_or_else(|| Error::Config(format!("atom `{item}` lacks `=`")))?;
                    atoms.push((parse_f64(v)?, parse_f64(p)?));
                }
                FiniteDistribution::new(atoms)?
            }
            "blocks" => {
                let mut components = Vec::new();
                for item in body.split('+') {
                    let (w, vals) = item
                        .split_once('@')
                        .ok_or_else(|| Error::Config(format!("block `{item}` lacks `@`")))?;
                    let vals = vals.split('/').map(parse_f64).collect::<Result<Vec<_>>>()?;
                    components.push((parse_f64(w)?, vals));
                }
                let b = components.first().map_or(0, |c| c.1.len());
                return Ok(DistSpec::Blocks(BlockMixtureSpec::new(b, components)?));
            }
            other => return Err(Error::Config(format!("unknown distribution kind `{other}`"))),
        };
        Ok(DistSpec::Finite(finite))
    }
}

/// The mean lower-bound tilt: `p'(x) = p(x) * (1 + eps/var * (x - mean))`.
///
/// The result has the same support, sums to one, and its mean is exactly
/// `mean + eps`. Requires `var > 2 * eps` so that every tilted weight stays
/// nonnegative on supports within [0, 1].
pub fn tilt_hard_instance(d: &FiniteDistribution, eps: f64) -> Result<FiniteDistribution> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::Precondition(format!("eps must be >= 0, got {eps}")));
    }
    if d.min() < 0.0 || d.max() > 1.0 {
        return Err(Error::Precondition("support must lie within [0, 1]".into()));
    }
    let var = d.variance();
    if var <= 2.0 * eps {
        return Err(Error::Precondition(format!(
            "variance {var} must exceed 2*eps = {}",
            2.0 * eps
        )));
    }
    let mu = d.mean();
    let scale = eps / var;
    FiniteDistribution::new(d.atoms().map(|(x, p)| (x, p * (1.0 + scale * (x - mu)))))
}

/// Squared Hellinger distance `1/2 * sum (sqrt p - sqrt q)^2` over the union
/// of supports.
pub fn hellinger_sq(p: &FiniteDistribution, q: &FiniteDistribution) -> f64 {
    let (pv, pp) = (p.values(), p.probs());
    let (qv, qp) = (q.values(), q.probs());
    let (mut i, mut j) = (0, 0);
    let mut acc = 0.0;
    while i < pv.len() || j < qv.len() {
        let (a, b) = match (pv.get(i), qv.get(j)) {
            (Some(x), Some(y)) if x == y => {
                i += 1;
                j += 1;
                (pp[i - 1], qp[j - 1])
            }
            (Some(x), Some(y)) if x < y => {
                i += 1;
                (pp[i - 1], 0.0)
            }
            (Some(_), None) => {
                i += 1;
                (pp[i - 1], 0.0)
            }
            _ => {
                j += 1;
                (0.0, qp[j - 1])
            }
        };
        let d = a.sqrt() - b.sqrt();
        acc += d * d;
    }
    (0.5 * acc).clamp(0.0, 1.0)
}

/// The gap family `B(1/2 +- eps_i)` with `eps_i = (100 ln^3(1/eps))^-i`, for
/// every `i >= 1` with `eps_i > eps`. Ordered by `i`, minus before plus.
pub fn gap_family(eps: f64) -> Result<Vec<FiniteDistribution>> {
    if !(eps > 0.0 && eps < (-1.0f64).exp()) {
        return Err(Error::Precondition(format!(
            "eps must lie in (0, 1/e), got {eps}"
        )));
    }
    let base = 1.0 / (100.0 * (1.0 / eps).ln().powi(3));
    let mut out = Vec::new();
    let mut eps_i = base;
    while eps_i > eps {
        out.push(FiniteDistribution::bernoulli(0.5 - eps_i)?);
        out.push(FiniteDistribution::bernoulli(0.5 + eps_i)?);
        eps_i *= base;
    }
    Ok(out)
}

/// `inf { x : P[X <= x] >= q }` for a distribution or mixture.
pub fn exact_quantile(spec: &DistSpec, q: f64) -> Result<f64> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::Precondition(format!("quantile level {q} outside (0, 1]")));
    }
    Ok(spec.element_distribution().quantile(q))
}

/// Variance across components of the mass each places below the augmented
/// `q`-quantile `N` of the mixture.
pub fn exact_sigma_q(spec: &BlockMixtureSpec, q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Precondition(format!("quantile level {q} outside (0, 1)")));
    }
    let n = spec.mixture().augmented_quantile(q);
    let masses: Vec<(f64, f64)> = spec
        .components()
        .map(|(w, block)| (w, crate::quantile::block_quantile_mass(block, n)))
        .collect();
    let mean: f64 = masses.iter().map(|(w, m)| w * m).sum();
    Ok(masses.iter().map(|(w, m)| w * (m - mean) * (m - mean)).sum())
}

/// Block-level structure of a synthetic corpus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Heterogeneity {
    /// Every byte independent with the same target frequency.
    Iid,
    /// Each block picks its target frequency from `{low, high}` with equal
    /// probability.
    TwoPoint { low: f64, high: f64 },
}

/// Pseudo-text specification.
///
/// Text form is a comma-separated `key=value` list: `char` (target byte,
/// default `e`), `p` (target frequency, default 0.12), `layout`
/// (`iid` or `two-point`), `lo`/`hi` (two-point frequencies), `block`
/// (block size for two-point layouts, default 4096). Non-target bytes are
/// drawn uniformly from the other lowercase letters and space.
#[derive(Debug, Clone, PartialEq)]
pub struct TextSpec {
    pub target: u8,
    pub freq: f64,
    pub heterogeneity: Heterogeneity,
    pub block_size: usize,
}

impl Default for TextSpec {
    fn default() -> Self {
        TextSpec {
            target: b'e',
            freq: 0.12,
            heterogeneity: Heterogeneity::Iid,
            block_size: 4096,
        }
    }
}

impl TextSpec {
    /// Target frequency of the whole corpus in expectation.
    pub fn expected_frequency(&self) -> f64 {
        match self.heterogeneity {
            Heterogeneity::Iid => self.freq,
            Heterogeneity::TwoPoint { low, high } => 0.5 * (low + high),
        }
    }

    fn filler(&self) -> Vec<u8> {
        (b'a'..=b'z')
            .chain(std::iter::once(b' '))
            .filter(|&c| c != self.target)
            .collect()
    }
}

impl FromStr for TextSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut spec = TextSpec::default();
        let mut layout = "iid".to_string();
        let (mut lo, mut hi) = (0.0, 1.0);
        for item in s.split(',').filter(|t| !t.trim().is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("text spec item `{item}` lacks `=`")))?;
            match k.trim() {
                "char" => {
                    let bytes = v.trim().as_bytes();
                    if bytes.len() != 1 {
                        return Err(Error::Config(format!("char must be one byte, got `{v}`")));
                    }
                    spec.target = bytes[0];
                }
                "p" => spec.freq = parse_f64(v)?,
                "layout" => layout = v.trim().to_string(),
                "lo" => lo = parse_f64(v)?,
                "hi" => hi = parse_f64(v)?,
                "block" => {
                    spec.block_size = v
                        .trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("bad block size `{v}`")))?
                }
                other => return Err(Error::Config(format!("unknown text spec key `{other}`"))),
            }
        }
        spec.heterogeneity = match layout.as_str() {
            "iid" => Heterogeneity::Iid,
            "two-point" | "uniform-blocks" => Heterogeneity::TwoPoint { low: lo, high: hi },
            other => return Err(Error::Config(format!("unknown text layout `{other}`"))),
        };
        for f in [spec.freq, lo, hi] {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::Config(format!("frequency {f} outside [0, 1]")));
            }
        }
        if spec.block_size == 0 {
            return Err(Error::Config("block size must be positive".into()));
        }
        Ok(spec)
    }
}

impl fmt::Display for TextSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "char={}", self.target as char)?;
        match self.heterogeneity {
            Heterogeneity::Iid => write!(f, ",p={},layout=iid", self.freq),
            Heterogeneity::TwoPoint { low, high } => write!(
                f,
                ",layout=two-point,lo={low},hi={high},block={}",
                self.block_size
            ),
        }
    }
}

/// Deterministic pseudo-text of `n_bytes` bytes.
pub fn synth_corpus(spec: &TextSpec, n_bytes: usize, seed: u64) -> Vec<u8> {
    let filler = spec.filler();
    let mut rng = stream_rng(seed);
    let mut out = Vec::with_capacity(n_bytes);
    let mut p = spec.freq;
    for i in 0..n_bytes {
        if let Heterogeneity::TwoPoint { low, high } = spec.heterogeneity {
            if i % spec.block_size == 0 {
                p = if rng.gen::<bool>() { high } else { low };
            }
        }
        let byte = if rng.gen::<f64>() < p {
            spec.target
        } else {
            filler[rng.gen_range(0..filler.len())]
        };
        out.push(byte);
    }
    out
}
