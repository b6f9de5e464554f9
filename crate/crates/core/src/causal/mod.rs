//! Propensity-score estimation, caliper matching, and treatment-effect
//! estimation on matched pairs.

mod logistic;
mod matching;

pub use logistic::{fit_logistic, predict_propensity, LogisticModel, LogisticSettings, PropensityScores};
pub use matching::{caliper_match, estimate_att, EffectEstimate, MatchResult};
