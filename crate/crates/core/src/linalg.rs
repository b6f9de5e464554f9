//! Internal dense linear algebra helpers.
//!
//! Decompositions of small matrices are delegated to nalgebra; the
//! rank-revealing column-space basis is written here so that tall
//! concatenated anchor blocks (r >> rank) decompose in O(r * p * rank)
//! instead of O(r * p^2). Everything is deterministic: no randomized
//! sketching, fixed tie-breaks, fixed sign conventions.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};

pub(crate) fn to_dmatrix(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub(crate) fn from_dmatrix(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues descending.
///
/// Ties are broken by the original eigenvector index, so the result is
/// deterministic for a given input.
pub(crate) fn symmetric_eigen_desc(m: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let (vals, vecs) = symmetric_eigen_asc(m);
    let k = vals.len();
    let vals_desc: Vec<f64> = vals.iter().rev().copied().collect();
    let mut vecs_desc = Array2::zeros((vecs.nrows(), k));
    for j in 0..k {
        vecs_desc.column_mut(j).assign(&vecs.column(k - 1 - j));
    }
    (vals_desc, vecs_desc)
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending.
pub(crate) fn symmetric_eigen_asc(m: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "symmetric eigen needs a square matrix");
    let eig = to_dmatrix(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap()
            .then(a.cmp(&b))
    });
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = Array2::zeros((n, n));
    for (j, &i) in order.iter().enumerate() {
        for r in 0..n {
            vecs[[r, j]] = eig.eigenvectors[(r, i)];
        }
    }
    (vals, vecs)
}

/// Flip each column so its largest-magnitude entry is positive.
///
/// Ties on magnitude are broken by the lowest row index.
pub(crate) fn fix_column_signs(m: &mut Array2<f64>) {
    for mut col in m.columns_mut() {
        let mut best = 0usize;
        let mut best_abs = f64::NEG_INFINITY;
        for (i, &v) in col.iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.mapv_inplace(|v| -v);
        }
    }
}

/// Orthonormal basis of the column space of `a`, found by column-pivoted
/// Gram-Schmidt with reorthogonalization.
///
/// Columns whose residual norm falls at or below `rel_tol` times the
/// largest initial column norm are treated as dependent; the number of
/// returned columns is the numerical rank at that tolerance.
pub(crate) fn column_space_basis(a: &Array2<f64>, rel_tol: f64) -> Array2<f64> {
    let (r, p) = a.dim();
    // Row-contiguous transpose so every inner product runs over a slice.
    let at = a.t().as_standard_layout().to_owned();
    let mut norms2: Vec<f64> = (0..p).map(|j| at.row(j).dot(&at.row(j))).collect();
    let max_norm = norms2.iter().cloned().fold(0.0, f64::max).sqrt();
    if max_norm == 0.0 {
        return Array2::zeros((r, 0));
    }
    let threshold = rel_tol * max_norm;

    let mut basis: Vec<Array1<f64>> = Vec::new();
    let mut remaining: Vec<usize> = (0..p).collect();
    let max_rank = r.min(p);

    while basis.len() < max_rank {
        let Some(&pivot) = remaining
            .iter()
            .max_by(|&&x, &&y| norms2[x].partial_cmp(&norms2[y]).unwrap().then(y.cmp(&x)))
        else {
            break;
        };
        // Recompute the pivot residual from scratch; downdated norms drift.
        let mut v = at.row(pivot).to_owned();
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&v);
                v.scaled_add(-c, q);
            }
        }
        let norm = v.dot(&v).sqrt();
        norms2[pivot] = norm * norm;
        if norm <= threshold {
            break;
        }
        v /= norm;
        remaining.retain(|&j| j != pivot);
        for &j in &remaining {
            let c = v.dot(&at.row(j).to_owned());
            norms2[j] = (norms2[j] - c * c).max(0.0);
        }
        basis.push(v);
    }

    let k = basis.len();
    let mut q = Array2::zeros((r, k));
    for (j, v) in basis.iter().enumerate() {
        q.column_mut(j).assign(v);
    }
    q
}

/// Moore-Penrose pseudoinverse of a small matrix, truncating singular
/// values at `rel_tol` times the largest.
pub(crate) fn pinv(a: &Array2<f64>, rel_tol: f64) -> Array2<f64> {
    let (rows, cols) = a.dim();
    if rows == 0 || cols == 0 {
        return Array2::zeros((cols, rows));
    }
    let svd = to_dmatrix(a).svd(true, true);
    let u = svd.u.as_ref().expect("svd requested u");
    let vt = svd.v_t.as_ref().expect("svd requested v_t");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let mut out = Array2::zeros((cols, rows));
    if smax == 0.0 {
        return out;
    }
    for (idx, &s) in svd.singular_values.iter().enumerate() {
        if s > rel_tol * smax {
            for i in 0..cols {
                for j in 0..rows {
                    out[[i, j]] += vt[(idx, i)] * u[(j, idx)] / s;
                }
            }
        }
    }
    out
}

/// Solve the symmetric positive-definite system `a x = b` by Cholesky.
pub(crate) fn solve_spd(a: &Array2<f64>, b: &Array1<f64>) -> Option<Array1<f64>> {
    let chol = to_dmatrix(a).cholesky()?;
    let rhs = DVector::from_iterator(b.len(), b.iter().copied());
    let x = chol.solve(&rhs);
    Some(Array1::from_iter(x.iter().copied()))
}

/// Generalized symmetric eigenproblem `a x = lambda b x` with `b`
/// positive definite, eigenvalues ascending. Solved through the Cholesky
/// factor of `b`. Eigenvectors are b-orthogonal, not unit-normalized.
pub(crate) fn generalized_sym_eig_asc(
    a: &Array2<f64>,
    b: &Array2<f64>,
) -> Option<(Vec<f64>, Array2<f64>)> {
    let chol = to_dmatrix(b).cholesky()?;
    let l = chol.l();
    // M = L^-1 A L^-T, symmetric; standard eigenproblem on M.
    let am = to_dmatrix(a);
    let mut m = am;
    l.solve_lower_triangular_mut(&mut m);
    let mut mt = m.transpose();
    l.solve_lower_triangular_mut(&mut mt);
    // Symmetrize against round-off before the eigensolver.
    let sym = (&mt + mt.transpose()) * 0.5;
    let (vals, vecs) = symmetric_eigen_asc(&from_dmatrix(&sym));
    // Back-transform: x = L^-T y.
    let mut y = to_dmatrix(&vecs);
    l.transpose().solve_upper_triangular_mut(&mut y);
    Some((vals, from_dmatrix(&y)))
}

/// Orthogonal matrix drawn from the Haar measure: QR of a standard
/// normal matrix with the R-diagonal sign correction.
pub(crate) fn haar_orthogonal<R: rand::Rng>(dim: usize, rng: &mut R) -> Array2<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let g: DMatrix<f64> = DMatrix::from_fn(dim, dim, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            for i in 0..dim {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    from_dmatrix(&q)
}
