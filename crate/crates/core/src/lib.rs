//! Distributed causal inference over dimensionality-reduced data shares.
//!
//! Parties never exchange raw covariates or the reducer functions that
//! produced their shares; only reduced representations of local data and
//! of a common anchor dataset cross the party boundary. An analyst aligns
//! the shares into one collaborative space, estimates propensity scores
//! there, and recovers treatment effects by caliper matching. The harness
//! compares this pipeline against centralized and single-party analyses
//! over bootstrap replicates under IID and non-IID partitionings.

pub mod causal;
pub mod collaboration;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod reduction;
pub mod rng;
pub mod tabular;

mod linalg;

pub use error::{Error, Result};
