//! Principal component analysis via the Gram matrix of the centered
//! data.

use ndarray::{Array1, Array2};

use super::{LinearReducer, MethodTag};
use crate::error::{Error, Result};
use crate::linalg;

/// Relative singular-value cutoff for the rank check. The Gram route
/// squares singular values, so the floor sits above the eigensolver's
/// noise level.
const RANK_REL_TOL: f64 = 1e-7;

/// Fit a PCA reducer: center at the column means, project onto the top
/// `out_dim` right singular vectors of the centered data, ordered by
/// descending singular value and sign-fixed.
pub fn fit_pca(x: &Array2<f64>, out_dim: usize) -> Result<LinearReducer> {
    let (n, m) = x.dim();
    if n < 2 {
        return Err(Error::Domain("pca needs at least two rows".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("pca needs finite inputs".into()));
    }
    let cap = (n - 1).min(m);
    if out_dim > cap {
        return Err(Error::DimensionMismatch(format!(
            "pca output dim {out_dim} exceeds min(rows-1, cols) = {cap}"
        )));
    }

    let center = Array1::from_shape_fn(m, |j| x.column(j).sum() / n as f64);
    let centered = x - &center.view().insert_axis(ndarray::Axis(0));
    let gram = centered.t().dot(&centered);
    let (vals, mut vecs) = linalg::symmetric_eigen_desc(&gram);

    let sigma: Vec<f64> = vals.iter().map(|&v| v.max(0.0).sqrt()).collect();
    let smax = sigma.first().copied().unwrap_or(0.0);
    let rank = sigma.iter().take(cap).filter(|&&s| s > RANK_REL_TOL * smax).count();
    if out_dim > rank {
        return Err(Error::RankDeficient {
            requested: out_dim,
            achievable: rank,
        });
    }

    linalg::fix_column_signs(&mut vecs);
    let projection = vecs.slice(ndarray::s![.., ..out_dim]).to_owned();
    LinearReducer::new(projection, center, MethodTag::Pca)
}
