//! Locality-preserving projections: a heat-kernel k-NN affinity graph
//! and the generalized eigenproblem on its Laplacian.

use ndarray::{Array1, Array2};

use super::{LinearReducer, MethodTag};
use crate::error::{Error, Result};
use crate::linalg;

/// Fit an LPP reducer.
///
/// The affinity graph joins each row to its `k_nn` nearest neighbors
/// (symmetrized by union) with weights exp(-d^2 / t); `heat_t = None`
/// sets t to the mean squared neighbor distance. The projection columns
/// are the eigenvectors of (X^T L X) a = lambda (X^T D X + eps I) a with
/// the smallest eigenvalues, unit-normalized and sign-fixed.
pub fn fit_lpp(x: &Array2<f64>, out_dim: usize, k_nn: usize, heat_t: Option<f64>) -> Result<LinearReducer> {
    let (n, m) = x.dim();
    if k_nn < 1 || n <= k_nn {
        return Err(Error::Domain(format!(
            "lpp needs rows > k_nn >= 1, got {n} rows and k_nn = {k_nn}"
        )));
    }
    if out_dim > m {
        return Err(Error::DimensionMismatch(format!(
            "lpp output dim {out_dim} exceeds {m} covariates"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("lpp needs finite inputs".into()));
    }

    // k nearest neighbors per row (ties by index), union-symmetrized.
    let mut edges: std::collections::BTreeSet<(usize, usize)> = std::collections::BTreeSet::new();
    for i in 0..n {
        let mut dists: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                let d: f64 = (0..m).map(|c| (x[[i, c]] - x[[j, c]]).powi(2)).sum();
                (d, j)
            })
            .collect();
        dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        for &(_, j) in dists.iter().take(k_nn) {
            edges.insert((i.min(j), i.max(j)));
        }
    }
    let mut edge_list: Vec<(usize, usize, f64)> = edges
        .into_iter()
        .map(|(i, j)| {
            let d: f64 = (0..m).map(|c| (x[[i, c]] - x[[j, c]]).powi(2)).sum();
            (i, j, d)
        })
        .collect();

    let t = match heat_t {
        Some(t) => {
            if !(t > 0.0) {
                return Err(Error::Config(format!("heat parameter must be positive, got {t}")));
            }
            t
        }
        None => {
            let total: f64 = edge_list.iter().map(|&(_, _, d)| d).sum();
            total / edge_list.len() as f64
        }
    };
    // Coincident neighbors make t collapse to zero; the kernel limit at
    // zero distance is weight 1.
    for (_, _, d) in edge_list.iter_mut() {
        *d = if t > 0.0 { (-*d / t).exp() } else { 1.0 };
    }

    let mut degree = Array1::<f64>::zeros(n);
    for &(i, j, w) in &edge_list {
        degree[i] += w;
        degree[j] += w;
    }

    // a_mat = X^T L X, b_mat = X^T D X + eps I.
    let mut dx = x.clone();
    for i in 0..n {
        for c in 0..m {
            dx[[i, c]] *= degree[i];
        }
    }
    let xtdx = x.t().dot(&dx);
    let mut wx = Array2::<f64>::zeros((n, m));
    for &(i, j, w) in &edge_list {
        for c in 0..m {
            wx[[i, c]] += w * x[[j, c]];
            wx[[j, c]] += w * x[[i, c]];
        }
    }
    let xtwx = x.t().dot(&wx);
    let mut a_mat = &xtdx - &xtwx;
    let trace: f64 = (0..m).map(|c| xtdx[[c, c]]).sum();
    let eps = 1e-8 * trace / m as f64;
    let mut b_mat = xtdx;
    for c in 0..m {
        b_mat[[c, c]] += eps.max(f64::MIN_POSITIVE);
    }
    // Symmetrize against round-off.
    a_mat = (&a_mat + &a_mat.t().to_owned()) * 0.5;
    b_mat = (&b_mat + &b_mat.t().to_owned()) * 0.5;

    let (_vals, vecs) = linalg::generalized_sym_eig_asc(&a_mat, &b_mat).ok_or_else(|| {
        Error::Solver(format!(
            "lpp eigenproblem failed: X^T D X is not positive definite even with eps = {eps:.3e} (trace {trace:.3e})"
        ))
    })?;

    let mut projection = vecs.slice(ndarray::s![.., ..out_dim]).to_owned();
    for mut col in projection.columns_mut() {
        let norm = col.dot(&col).sqrt();
        if norm > 0.0 {
            col.mapv_inplace(|v| v / norm);
        }
    }
    linalg::fix_column_signs(&mut projection);
    LinearReducer::new(projection, Array1::zeros(m), MethodTag::Lpp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    /// Clustered data with tight local structure in two coordinates and
    /// plain noise elsewhere, every column on a comparable scale.
    fn clustered(n_per: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = 8;
        let centers = [[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]];
        let mut x = Array2::zeros((3 * n_per, m));
        for (c, center) in centers.iter().enumerate() {
            for i in 0..n_per {
                let row = c * n_per + i;
                for j in 0..m {
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    x[[row, j]] = if j < 2 {
                        center[j] + 0.15 * noise
                    } else {
                        noise
                    };
                }
            }
        }
        x
    }

    fn rayleigh(a: &Array2<f64>, b: &Array2<f64>, v: &ndarray::Array1<f64>) -> f64 {
        v.dot(&a.dot(v)) / v.dot(&b.dot(v))
    }

    #[test]
    fn projection_beats_random_directions_on_the_rayleigh_quotient() {
        let x = clustered(30, 40);
        let (n, m) = x.dim();
        let out_dim = 2;
        let r = fit_lpp(&x, out_dim, 4, None).unwrap();

        // Rebuild the pencil the same way the fit does, to evaluate the
        // quotient of arbitrary directions.
        let mut edges = std::collections::BTreeSet::new();
        for i in 0..n {
            let mut dists: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let d: f64 = (0..m).map(|c| (x[[i, c]] - x[[j, c]]).powi(2)).sum();
                    (d, j)
                })
                .collect();
            dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            for &(_, j) in dists.iter().take(4) {
                edges.insert((i.min(j), i.max(j)));
            }
        }
        let edge_list: Vec<(usize, usize, f64)> = edges
            .into_iter()
            .map(|(i, j)| {
                let d: f64 = (0..m).map(|c| (x[[i, c]] - x[[j, c]]).powi(2)).sum();
                (i, j, d)
            })
            .collect();
        let t: f64 = edge_list.iter().map(|&(_, _, d)| d).sum::<f64>() / edge_list.len() as f64;
        let mut degree = ndarray::Array1::<f64>::zeros(n);
        let mut wx = Array2::<f64>::zeros((n, m));
        for &(i, j, d) in &edge_list {
            let w = (-d / t).exp();
            degree[i] += w;
            degree[j] += w;
            for c in 0..m {
                wx[[i, c]] += w * x[[j, c]];
                wx[[j, c]] += w * x[[i, c]];
            }
        }
        let mut dx = x.clone();
        for i in 0..n {
            for c in 0..m {
                dx[[i, c]] *= degree[i];
            }
        }
        let xtdx = x.t().dot(&dx);
        let a_mat = &xtdx - &x.t().dot(&wx);
        let trace: f64 = (0..m).map(|c| xtdx[[c, c]]).sum();
        let mut b_mat = xtdx;
        for c in 0..m {
            b_mat[[c, c]] += 1e-8 * trace / m as f64;
        }

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for col in 0..out_dim {
            let v = r.projection().column(col).to_owned();
            let fitted_q = rayleigh(&a_mat, &b_mat, &v);
            for _ in 0..100 {
                let mut random = ndarray::Array1::from_shape_fn(m, |_| {
                    let s: f64 = StandardNormal.sample(&mut rng);
                    s
                });
                let norm = random.dot(&random).sqrt();
                random.mapv_inplace(|v| v / norm);
                let random_q = rayleigh(&a_mat, &b_mat, &random);
                assert!(
                    fitted_q <= random_q + 1e-12,
                    "column {col}: fitted quotient {fitted_q} exceeds random {random_q}"
                );
            }
        }
    }

    #[test]
    fn duplicate_rows_stay_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let base: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = Array2::from_shape_fn((12, 4), |(_, j)| base[j]);
        let r = fit_lpp(&x, 2, 3, None).unwrap();
        assert!(r.projection().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn repeated_fits_are_identical() {
        let x = clustered(15, 6);
        let a = fit_lpp(&x, 3, 5, None).unwrap();
        let b = fit_lpp(&x, 3, 5, None).unwrap();
        assert_eq!(a.projection(), b.projection());
    }
}
