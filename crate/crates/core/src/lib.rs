//! Sequential estimators with adaptive stopping, and their application to
//! large files read in blocks.
//!
//! The estimators decide on the fly how many samples to take, so that easy
//! inputs (low variance, quantiles sitting inside an atom) finish early while
//! the `(eps, delta)` guarantee holds on every input:
//!
//! * [`mean`]: two-phase additive mean estimation, a sample-reusing variant,
//!   and relative-error estimation for positive means.
//! * [`quantile`]: quantiles of augmented samples, with a multi-scale
//!   search that stops as soon as the answer is certified.
//! * [`learners`]: sup-norm histograms and KS-distance CDFs built from many
//!   sub-estimators sharing one stream.
//! * [`blockio`]: block-granularity file access; a sampled block is one draw.
//! * [`amplify`]: turns a 9/10-correct estimator into a `1 - delta` one.
//!
//! All randomness derives from a `u64` seed, so reports are reproducible
//! bit for bit.

pub mod amplify;
pub mod augmented;
pub mod blockio;
pub mod config;
pub mod distributions;
pub mod error;
pub mod learners;
pub mod mean;
pub mod quantile;
pub mod report;
pub mod rng;
pub mod sequential;
pub mod stream;

pub use augmented::AugmentedValue;
pub use config::{Budget, Constants, EstimatorConfig};
pub use error::{Error, Result};
pub use report::{Estimate, EstimateReport, Termination};
pub use stream::{make_stream, Draw, SampleStream, StreamSource};
