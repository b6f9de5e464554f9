//! Shareable anchor data: uniform draws within per-covariate bounds.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tabular::PartyDataset;

/// A synthetic matrix every party reduces, used to align the parties
/// into a common space. Safe to share by construction: entries are
/// random draws, touching the real data only through the bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorData {
    matrix: Array2<f64>,
    bounds: Vec<(f64, f64)>,
    seed: u64,
}

impl AnchorData {
    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn width(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Draw `rows` anchor samples, each covariate independently uniform in
/// its [min, max]. Every kind, including binary, is treated as a
/// continuous range. Deterministic under the seed.
pub fn generate_anchor(bounds: &[(f64, f64)], rows: usize, seed: u64) -> Result<AnchorData> {
    if rows == 0 {
        return Err(Error::Config("anchor needs at least one row".into()));
    }
    for (j, &(lo, hi)) in bounds.iter().enumerate() {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Domain(format!(
                "anchor bounds for covariate {j} are inverted or non-finite: [{lo}, {hi}]"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = bounds.len();
    let mut matrix = Array2::zeros((rows, m));
    for i in 0..rows {
        for j in 0..m {
            let (lo, hi) = bounds[j];
            matrix[[i, j]] = if lo == hi { lo } else { rng.random_range(lo..hi) };
        }
    }
    Ok(AnchorData {
        matrix,
        bounds: bounds.to_vec(),
        seed,
    })
}

/// Global per-covariate bounds assembled from per-party summaries. This
/// is the one statistic that leaves each party: the coordinator learns
/// local minima and maxima, nothing else.
pub fn pooled_bounds(parties: &[PartyDataset]) -> Result<Vec<(f64, f64)>> {
    let first = parties
        .first()
        .ok_or_else(|| Error::Domain("pooled bounds need at least one party".into()))?;
    let m = first.population.m();
    let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); m];
    for party in parties {
        for (j, (lo, hi)) in party.population.column_bounds().into_iter().enumerate() {
            bounds[j].0 = bounds[j].0.min(lo);
            bounds[j].1 = bounds[j].1.max(hi);
        }
    }
    Ok(bounds)
}
