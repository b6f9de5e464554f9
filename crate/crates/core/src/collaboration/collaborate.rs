//! Aligning intermediate shares into one collaborative space.
//!
//! The concatenated reduced-anchor blocks are decomposed once; their top
//! left singular vectors define the common target, and each party's map
//! is the least-squares transform of its own anchor block onto that
//! target.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::IntermediateShare;
use crate::error::{Error, Result};
use crate::linalg;

/// Anchor-rank tolerance and least-squares truncation.
const RANK_TOL: f64 = 1e-12;

/// Whether the alignment target keeps the singular-value scaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetScaling {
    /// Target = left singular vectors (orthonormal columns).
    #[default]
    Unit,
    /// Target = left singular vectors scaled by their singular values.
    Scaled,
}

/// Per-party linear maps into the collaborative space.
#[derive(Debug, Clone)]
pub struct CollaborationMaps {
    maps: BTreeMap<usize, Array2<f64>>,
    collab_dim: usize,
    anchor_residuals: BTreeMap<usize, f64>,
}

impl CollaborationMaps {
    pub fn collab_dim(&self) -> usize {
        self.collab_dim
    }

    pub fn map_for(&self, party_id: usize) -> Option<&Array2<f64>> {
        self.maps.get(&party_id)
    }

    /// Relative Frobenius residual of each party's anchor fit.
    pub fn anchor_residuals(&self) -> &BTreeMap<usize, f64> {
        &self.anchor_residuals
    }
}

/// Fit per-party maps with the default (unit) target.
pub fn fit_collaboration(shares: &[IntermediateShare], collab_dim: usize) -> Result<CollaborationMaps> {
    fit_collaboration_with(shares, collab_dim, TargetScaling::Unit)
}

pub fn fit_collaboration_with(
    shares: &[IntermediateShare],
    collab_dim: usize,
    scaling: TargetScaling,
) -> Result<CollaborationMaps> {
    if shares.is_empty() {
        return Err(Error::Domain("collaboration needs at least one share".into()));
    }
    let r = shares[0].anchor_rows();
    let mut seen = std::collections::HashSet::new();
    for share in shares {
        if share.anchor_rows() != r {
            return Err(Error::DimensionMismatch(format!(
                "party {} carries {} anchor rows, expected {r}",
                share.party_id,
                share.anchor_rows()
            )));
        }
        if !seen.insert(share.party_id) {
            return Err(Error::Domain(format!(
                "duplicate share for party {}",
                share.party_id
            )));
        }
    }
    if collab_dim == 0 {
        return Err(Error::Config("collaborative dimension must be >= 1".into()));
    }
    if r < collab_dim + 1 {
        return Err(Error::Domain(format!(
            "{r} anchor rows cannot determine a {collab_dim}-dimensional space; need at least collab_dim + 1"
        )));
    }

    // Concatenated anchor block, r x sum(m_k).
    let total_width: usize = shares.iter().map(|s| s.reduced_dim()).sum();
    let mut stacked = Array2::zeros((r, total_width));
    let mut offset = 0;
    for share in shares {
        stacked
            .slice_mut(ndarray::s![.., offset..offset + share.reduced_dim()])
            .assign(&share.reduced_anchor);
        offset += share.reduced_dim();
    }

    // Orthonormal basis of the stack's column space; everything after
    // this runs in the rank-sized coordinate system, so wide stacks from
    // many parties stay cheap. With Q orthonormal, pinv(Q C) = pinv(C)
    // Q^T, so per-party least squares against the target only needs the
    // small coefficient blocks C_k = Q^T block_k.
    let q = linalg::column_space_basis(&stacked, RANK_TOL);
    let rank = q.ncols();
    if collab_dim > rank {
        return Err(Error::RankDeficient {
            requested: collab_dim,
            achievable: rank,
        });
    }
    let ct = stacked.t().dot(&q); // p x rank, rows are C columns
    let gram = ct.t().dot(&ct); // rank x rank = C C^T
    let (vals, u_c) = linalg::symmetric_eigen_desc(&gram);
    let sigma: Vec<f64> = vals.iter().map(|&v| v.max(0.0).sqrt()).collect();

    // The target is the top left singular vectors of the stack,
    // sign-fixed on their full-length representation Q u_c.
    let u_full = q.dot(&u_c);
    let mut target_small = u_c.slice(ndarray::s![.., ..collab_dim]).to_owned();
    for (j, mut col) in target_small.columns_mut().into_iter().enumerate() {
        let full = u_full.column(j);
        let mut best = 0usize;
        let mut best_abs = f64::NEG_INFINITY;
        for (i, &v) in full.iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = i;
            }
        }
        let mut factor = if full[best] < 0.0 { -1.0 } else { 1.0 };
        if scaling == TargetScaling::Scaled {
            factor *= sigma[j];
        }
        if factor != 1.0 {
            col.mapv_inplace(|v| v * factor);
        }
    }
    let target_norm = target_small.iter().map(|v| v * v).sum::<f64>().sqrt();

    let mut maps = BTreeMap::new();
    let mut residuals = BTreeMap::new();
    let mut offset = 0;
    for share in shares {
        let width = share.reduced_dim();
        // C_k^T lives in the matching rows of ct.
        let c_k = ct.slice(ndarray::s![offset..offset + width, ..]).t().to_owned();
        offset += width;
        let map = linalg::pinv(&c_k, RANK_TOL).dot(&target_small);
        let resid = (&c_k.dot(&map) - &target_small)
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
            / target_norm;
        if !resid.is_finite() {
            return Err(Error::Solver(format!(
                "non-finite anchor residual for party {}",
                share.party_id
            )));
        }
        maps.insert(share.party_id, map);
        residuals.insert(share.party_id, resid);
    }
    Ok(CollaborationMaps {
        maps,
        collab_dim,
        anchor_residuals: residuals,
    })
}

/// Stacked collaborative representation with aligned treatment, outcome,
/// ids, and row provenance.
#[derive(Debug, Clone)]
pub struct CollaborativeDataset {
    features: Array2<f64>,
    treatment: Vec<bool>,
    outcome: Array1<f64>,
    ids: Vec<u64>,
    party_of_row: Vec<usize>,
}

impl CollaborativeDataset {
    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn treatment(&self) -> &[bool] {
        &self.treatment
    }

    pub fn outcome(&self) -> &Array1<f64> {
        &self.outcome
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn party_of_row(&self) -> &[usize] {
        &self.party_of_row
    }
}

/// Map every share through its party's transform and stack the results
/// in share order.
pub fn build_collaborative_dataset(
    shares: &[IntermediateShare],
    maps: &CollaborationMaps,
) -> Result<CollaborativeDataset> {
    if shares.is_empty() {
        return Err(Error::Domain("no shares to stack".into()));
    }
    let total: usize = shares.iter().map(|s| s.len()).sum();
    let mut features = Array2::zeros((total, maps.collab_dim()));
    let mut treatment = Vec::with_capacity(total);
    let mut outcome = Vec::with_capacity(total);
    let mut ids = Vec::with_capacity(total);
    let mut party_of_row = Vec::with_capacity(total);
    let mut cursor = 0;
    for share in shares {
        let map = maps.map_for(share.party_id).ok_or_else(|| {
            Error::Domain(format!("no collaboration map for party {}", share.party_id))
        })?;
        if map.nrows() != share.reduced_dim() {
            return Err(Error::DimensionMismatch(format!(
                "map for party {} expects {} reduced columns, share has {}",
                share.party_id,
                map.nrows(),
                share.reduced_dim()
            )));
        }
        let mapped = share.reduced.dot(map);
        features
            .slice_mut(ndarray::s![cursor..cursor + share.len(), ..])
            .assign(&mapped);
        treatment.extend_from_slice(&share.treatment);
        outcome.extend(share.outcome.iter().copied());
        ids.extend_from_slice(&share.ids);
        party_of_row.extend(std::iter::repeat(share.party_id).take(share.len()));
        cursor += share.len();
    }
    let mut uniq = ids.clone();
    uniq.sort_unstable();
    uniq.dedup();
    if uniq.len() != ids.len() {
        return Err(Error::Domain("duplicate ids across shares".into()));
    }
    Ok(CollaborativeDataset {
        features,
        treatment,
        outcome: Array1::from_vec(outcome),
        ids,
        party_of_row,
    })
}
