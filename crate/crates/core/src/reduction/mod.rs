//! Party-local dimensionality reduction: PCA, locality-preserving
//! projections, a one-hidden-layer autoencoder, the bootstrap reducer
//! built from resampled propensity coefficients, and their orthogonally
//! mixed composition.
//!
//! Reducers never cross the party boundary, so none of these types
//! serialize. `unsafe_export_reducer` exists for diagnostics and tests
//! only and is reachable solely through an explicit opt-in flag.

mod autoencoder;
mod bootstrap;
mod lpp;
mod pca;

pub use autoencoder::fit_autoencoder;
pub use bootstrap::{fit_bootstrap_reducer, BootstrapReducerConfig};
pub use lpp::fit_lpp;
pub use pca::fit_pca;

use ndarray::{Array1, Array2};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg;

/// Provenance tag of a linear reducer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodTag {
    Pca,
    Lpp,
    Bootstrap,
    /// Hand-built linear map (tests and diagnostics).
    Custom,
}

impl MethodTag {
    fn as_str(self) -> &'static str {
        match self {
            MethodTag::Pca => "pca",
            MethodTag::Lpp => "lpp",
            MethodTag::Bootstrap => "bootstrap",
            MethodTag::Custom => "custom",
        }
    }
}

/// Affine-then-linear map: rows are centered, then projected.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearReducer {
    projection: Array2<f64>, // m x m_out
    center: Array1<f64>,     // m
    method_tag: MethodTag,
}

impl LinearReducer {
    pub fn new(projection: Array2<f64>, center: Array1<f64>, method_tag: MethodTag) -> Result<Self> {
        if projection.nrows() != center.len() {
            return Err(Error::DimensionMismatch(format!(
                "projection has {} input rows but center has {} entries",
                projection.nrows(),
                center.len()
            )));
        }
        if projection.iter().any(|v| !v.is_finite()) || center.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("reducer parameters must be finite".into()));
        }
        Ok(LinearReducer {
            projection,
            center,
            method_tag,
        })
    }

    /// The identity map on `dim` covariates.
    pub fn identity(dim: usize) -> Self {
        LinearReducer {
            projection: Array2::eye(dim),
            center: Array1::zeros(dim),
            method_tag: MethodTag::Custom,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.projection.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.projection.ncols()
    }

    pub fn projection(&self) -> &Array2<f64> {
        &self.projection
    }

    pub fn center(&self) -> &Array1<f64> {
        &self.center
    }

    pub fn method_tag(&self) -> MethodTag {
        self.method_tag
    }

    /// Numerical column rank of the projection at a relative tolerance.
    pub fn numerical_rank(&self, rel_tol: f64) -> usize {
        linalg::column_space_basis(&self.projection, rel_tol).ncols()
    }

    pub fn apply(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "reducer expects {} covariates, matrix has {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        let centered = x - &self.center.view().insert_axis(ndarray::Axis(0));
        Ok(centered.dot(&self.projection))
    }
}

/// One-hidden-layer tanh encoder with the input standardization baked in.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearReducer {
    weights: Array2<f64>, // m_out x m
    biases: Array1<f64>,  // m_out
    input_means: Array1<f64>,
    input_scales: Array1<f64>,
    /// Mean squared reconstruction error at the end of training.
    pub final_loss: f64,
    /// Gradient steps taken (accepted and rejected).
    pub epochs_run: usize,
}

impl NonlinearReducer {
    pub fn input_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn apply(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch(format!(
                "reducer expects {} covariates, matrix has {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        let n = x.nrows();
        let mut out = Array2::zeros((n, self.output_dim()));
        for i in 0..n {
            for h in 0..self.output_dim() {
                let mut z = self.biases[h];
                for j in 0..self.input_dim() {
                    let standardized = (x[[i, j]] - self.input_means[j]) / self.input_scales[j];
                    z += self.weights[[h, j]] * standardized;
                }
                out[[i, h]] = z.tanh();
            }
        }
        Ok(out)
    }
}

/// A party's reduction function.
#[derive(Debug, Clone)]
pub enum Reducer {
    Linear(LinearReducer),
    Nonlinear(NonlinearReducer),
    /// Concatenation of a base reducer with a bootstrap reducer, mixed
    /// by a random orthogonal matrix.
    Composed {
        dr: Box<Reducer>,
        bs: LinearReducer,
        mixer: Array2<f64>,
    },
}

impl Reducer {
    pub fn input_dim(&self) -> usize {
        match self {
            Reducer::Linear(r) => r.input_dim(),
            Reducer::Nonlinear(r) => r.input_dim(),
            Reducer::Composed { dr, .. } => dr.input_dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Reducer::Linear(r) => r.output_dim(),
            Reducer::Nonlinear(r) => r.output_dim(),
            Reducer::Composed { mixer, .. } => mixer.ncols(),
        }
    }

    pub fn method_name(&self) -> &'static str {
        match self {
            Reducer::Linear(r) => r.method_tag().as_str(),
            Reducer::Nonlinear(_) => "autoencoder",
            Reducer::Composed { .. } => "composed",
        }
    }

    pub fn apply(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        match self {
            Reducer::Linear(r) => r.apply(x),
            Reducer::Nonlinear(r) => r.apply(x),
            Reducer::Composed { dr, bs, mixer } => {
                let left = dr.apply(x)?;
                let right = bs.apply(x)?;
                let n = x.nrows();
                let total = left.ncols() + right.ncols();
                let mut concat = Array2::zeros((n, total));
                concat
                    .slice_mut(ndarray::s![.., ..left.ncols()])
                    .assign(&left);
                concat
                    .slice_mut(ndarray::s![.., left.ncols()..])
                    .assign(&right);
                Ok(concat.dot(mixer))
            }
        }
    }
}

/// Row-wise application of a reducer: output is rows(x) x m_out.
pub fn apply_reducer(reducer: &Reducer, x: &Array2<f64>) -> Result<Array2<f64>> {
    reducer.apply(x)
}

/// Haar-distributed orthogonal matrix, deterministic under the seed.
pub fn random_orthogonal(dim: usize, seed: u64) -> Array2<f64> {
    assert!(dim >= 1, "orthogonal matrix needs dim >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    linalg::haar_orthogonal(dim, &mut rng)
}

/// Concatenate a base reducer with a bootstrap reducer and mix the
/// combined outputs by a seeded random orthogonal matrix.
pub fn compose_reducer(dr: Reducer, bs: LinearReducer, seed: u64) -> Result<Reducer> {
    if dr.input_dim() != bs.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "base reducer takes {} covariates, bootstrap reducer takes {}",
            dr.input_dim(),
            bs.input_dim()
        )));
    }
    let total = dr.output_dim() + bs.output_dim();
    if total == 0 {
        return Err(Error::Degenerate("composed reducer has no output dimensions".into()));
    }
    let mixer = random_orthogonal(total, seed);
    Ok(Reducer::Composed {
        dr: Box::new(dr),
        bs,
        mixer,
    })
}

/// Serialize reducer parameters for inspection. This is the only path
/// that externalizes a reducer; it exists for tests and explicit
/// debugging and must never feed the share envelope.
pub fn unsafe_export_reducer(reducer: &Reducer) -> String {
    fn linear_json(r: &LinearReducer) -> serde_json::Value {
        serde_json::json!({
            "kind": "linear",
            "method": r.method_tag().as_str(),
            "projection": r.projection().rows().into_iter().map(|row| row.to_vec()).collect::<Vec<_>>(),
            "center": r.center().to_vec(),
        })
    }
    fn to_json(r: &Reducer) -> serde_json::Value {
        match r {
            Reducer::Linear(l) => linear_json(l),
            Reducer::Nonlinear(n) => serde_json::json!({
                "kind": "autoencoder",
                "weights": n.weights.rows().into_iter().map(|row| row.to_vec()).collect::<Vec<_>>(),
                "biases": n.biases.to_vec(),
                "input_means": n.input_means.to_vec(),
                "input_scales": n.input_scales.to_vec(),
                "final_loss": n.final_loss,
                "epochs_run": n.epochs_run,
            }),
            Reducer::Composed { dr, bs, mixer } => serde_json::json!({
                "kind": "composed",
                "dr": to_json(dr),
                "bs": linear_json(bs),
                "mixer": mixer.rows().into_iter().map(|row| row.to_vec()).collect::<Vec<_>>(),
            }),
        }
    }
    serde_json::to_string_pretty(&to_json(reducer)).expect("reducer export serializes")
}
