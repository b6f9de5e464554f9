//! Evaluation metrics: effect-estimate gap, propensity inconsistency,
//! standardized mean differences, and histogram Jeffreys divergence.

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::{CovariateKind, CovariateSchema};

/// Per-covariate standardized mean differences and their maximum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BalanceReport {
    /// One entry per covariate; `None` where the SMD is undefined.
    pub smd: Vec<Option<f64>>,
    pub masmd: f64,
    pub undefined_covariates: Vec<String>,
}

/// Per-covariate Jeffreys divergences and their maximum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributionReport {
    pub jeffreys: Vec<f64>,
    pub mjd: f64,
    pub bins: usize,
    pub smoothing_eps: f64,
}

/// Whole-experiment deviation of one arm from the centralized arm.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonMetrics {
    pub gap: f64,
    pub inconsistency_mean: f64,
    pub inconsistency_se: Option<f64>,
    pub replicate_count: usize,
}

/// Root-mean-square difference between paired effect estimates.
pub fn gap(estimates: &[f64], reference: &[f64]) -> Result<f64> {
    if estimates.len() != reference.len() {
        return Err(Error::DimensionMismatch(format!(
            "gap needs equal lengths, got {} and {}",
            estimates.len(),
            reference.len()
        )));
    }
    if estimates.is_empty() {
        return Err(Error::Domain("gap needs at least one replicate".into()));
    }
    let sum_sq: f64 = estimates
        .iter()
        .zip(reference.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((sum_sq / estimates.len() as f64).sqrt())
}

/// Root-mean-square difference between two propensity maps over their
/// common ids.
pub fn inconsistency(scores: &BTreeMap<u64, f64>, reference: &BTreeMap<u64, f64>) -> Result<f64> {
    let mut sum_sq = 0.0;
    let mut count = 0usize;
    for (id, &s) in scores {
        if let Some(&r) = reference.get(id) {
            sum_sq += (s - r) * (s - r);
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Domain(
            "inconsistency: the id sets do not intersect".into(),
        ));
    }
    Ok((sum_sq / count as f64).sqrt())
}

/// Covariate kinds as seen by the balance metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmdKind {
    Continuous,
    Binary,
}

impl SmdKind {
    pub fn from_covariate(kind: &CovariateKind) -> SmdKind {
        match kind {
            CovariateKind::Binary => SmdKind::Binary,
            // Ordinal columns balance like continuous scores.
            CovariateKind::Continuous | CovariateKind::Ordinal { .. } => SmdKind::Continuous,
        }
    }
}

/// Standardized mean difference, treated minus control. `None` when the
/// pooled denominator vanishes while the means differ.
pub fn smd(treated: &[f64], control: &[f64], kind: SmdKind) -> Result<Option<f64>> {
    if treated.is_empty() || control.is_empty() {
        return Err(Error::Domain("smd needs non-empty groups".into()));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (num, denom_sq) = match kind {
        SmdKind::Continuous => {
            let mt = mean(treated);
            let mc = mean(control);
            let var = |v: &[f64], m: f64| {
                if v.len() < 2 {
                    0.0
                } else {
                    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0)
                }
            };
            (mt - mc, (var(treated, mt) + var(control, mc)) / 2.0)
        }
        SmdKind::Binary => {
            let pt = mean(treated);
            let pc = mean(control);
            (pt - pc, (pt * (1.0 - pt) + pc * (1.0 - pc)) / 2.0)
        }
    };
    let denom = denom_sq.sqrt();
    if denom == 0.0 {
        return Ok(if num == 0.0 { Some(0.0) } else { None });
    }
    Ok(Some(num / denom))
}

/// Maximum absolute value over the defined SMD entries.
pub fn masmd(entries: &[Option<f64>]) -> Result<f64> {
    let defined: Vec<f64> = entries.iter().filter_map(|e| *e).collect();
    if defined.is_empty() {
        return Err(Error::Domain("masmd: every SMD is undefined".into()));
    }
    Ok(defined.iter().fold(0.0f64, |acc, v| acc.max(v.abs())))
}

/// Full balance report for a matched or unmatched sample: one SMD per
/// schema column between the treated and control covariate rows.
pub fn balance_report(
    treated_rows: &Array2<f64>,
    control_rows: &Array2<f64>,
    schema: &CovariateSchema,
) -> Result<BalanceReport> {
    if treated_rows.ncols() != schema.len() || control_rows.ncols() != schema.len() {
        return Err(Error::DimensionMismatch(
            "balance report: column count differs from schema".into(),
        ));
    }
    let mut smds = Vec::with_capacity(schema.len());
    let mut undefined = Vec::new();
    for j in 0..schema.len() {
        let t: Vec<f64> = treated_rows.column(j).to_vec();
        let c: Vec<f64> = control_rows.column(j).to_vec();
        let kind = SmdKind::from_covariate(&schema.column(j).kind);
        let value = smd(&t, &c, kind)?;
        if value.is_none() {
            undefined.push(schema.column(j).name.clone());
        }
        smds.push(value);
    }
    let masmd = masmd(&smds)?;
    Ok(BalanceReport {
        smd: smds,
        masmd,
        undefined_covariates: undefined,
    })
}

/// Smoothed, normalized histogram over `bins` equal-width intervals of
/// `[lo, hi]`. The last bin is right-closed; out-of-range values land in
/// the edge bins.
pub fn histogram(values: &[f64], bins: usize, range: (f64, f64), eps: f64) -> Result<Vec<f64>> {
    let (lo, hi) = range;
    if !(lo < hi) {
        return Err(Error::Domain(format!("histogram needs lo < hi, got [{lo}, {hi}]")));
    }
    if bins == 0 {
        return Err(Error::Domain("histogram needs at least one bin".into()));
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0.0f64; bins];
    for &v in values {
        let idx = ((v - lo) / width).floor() as i64;
        let idx = idx.clamp(0, bins as i64 - 1) as usize;
        counts[idx] += 1.0;
    }
    let total: f64 = counts.iter().map(|c| c + eps).sum();
    Ok(counts.iter().map(|c| (c + eps) / total).collect())
}

/// Jeffreys divergence: symmetrized KL with natural logarithm. Inputs
/// must be strictly positive (smoothed) probability vectors.
pub fn jeffreys(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!(
            "jeffreys needs equal lengths, got {} and {}",
            p.len(),
            q.len()
        )));
    }
    for dist in [p, q] {
        if dist.iter().any(|&v| v <= 0.0) {
            return Err(Error::Domain(
                "jeffreys needs strictly positive entries; smooth the histograms first".into(),
            ));
        }
        let sum: f64 = dist.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "jeffreys input sums to {sum}, not 1"
            )));
        }
    }
    let kl = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b.iter()).map(|(x, y)| x * (x / y).ln()).sum()
    };
    Ok(kl(p, q) + kl(q, p))
}

pub const DEFAULT_BINS: usize = 20;
pub const DEFAULT_SMOOTHING_EPS: f64 = 1e-9;

/// Per-covariate Jeffreys divergence between two matched samples, and
/// its maximum. Both samples are histogrammed over the union of their
/// per-covariate ranges.
pub fn mjd(
    matched: &Array2<f64>,
    reference_matched: &Array2<f64>,
    bins: usize,
) -> Result<DistributionReport> {
    if matched.ncols() != reference_matched.ncols() {
        return Err(Error::DimensionMismatch(
            "mjd: samples have different covariate counts".into(),
        ));
    }
    if matched.nrows() == 0 || reference_matched.nrows() == 0 {
        return Err(Error::Domain("mjd: empty matched sample".into()));
    }
    let eps = DEFAULT_SMOOTHING_EPS;
    let mut divergences = Vec::with_capacity(matched.ncols());
    for j in 0..matched.ncols() {
        let a: Vec<f64> = matched.column(j).to_vec();
        let b: Vec<f64> = reference_matched.column(j).to_vec();
        let lo = a.iter().chain(b.iter()).cloned().fold(f64::INFINITY, f64::min);
        let hi = a.iter().chain(b.iter()).cloned().fold(f64::NEG_INFINITY, f64::max);
        // A covariate constant across both samples is a shared point
        // mass; the divergence is zero.
        if lo == hi {
            divergences.push(0.0);
            continue;
        }
        let pa = histogram(&a, bins, (lo, hi), eps)?;
        let pb = histogram(&b, bins, (lo, hi), eps)?;
        divergences.push(jeffreys(&pa, &pb)?);
    }
    let mjd = divergences.iter().fold(0.0f64, |acc, &v| acc.max(v));
    Ok(DistributionReport {
        jeffreys: divergences,
        mjd,
        bins,
        smoothing_eps: eps,
    })
}
