//! Ridge-penalized logistic regression by Newton steps on internally
//! standardized features.
//!
//! The objective is the log-likelihood minus (ridge/2) times the squared
//! norm of the original-scale coefficients, intercept unpenalized.
//! Standardization is only a conditioning device: the per-coordinate
//! penalty is rescaled so the optimum in standardized coordinates maps
//! exactly onto the original-scale optimum.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticSettings {
    /// Ridge strength on the coefficients (intercept unpenalized).
    pub ridge: f64,
    /// Convergence threshold on the penalized gradient norm.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogisticSettings {
    fn default() -> Self {
        LogisticSettings {
            ridge: 1e-6,
            tol: 1e-8,
            max_iter: 200,
        }
    }
}

/// A fitted propensity model. Coefficients are reported in the original
/// feature scale.
#[derive(Debug, Clone)]
pub struct LogisticModel {
    pub coefficients: Array1<f64>,
    pub intercept: f64,
    pub ridge: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Column means and scales used internally during fitting.
    pub feature_means: Array1<f64>,
    pub feature_scales: Array1<f64>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl LogisticModel {
    pub fn linear_predictor(&self, x: &Array2<f64>) -> Result<Array1<f64>> {
        if x.ncols() != self.coefficients.len() {
            return Err(Error::DimensionMismatch(format!(
                "model has {} features, matrix has {} columns",
                self.coefficients.len(),
                x.ncols()
            )));
        }
        Ok(x.dot(&self.coefficients) + self.intercept)
    }

    /// Gradient of the penalized log-likelihood at the fitted optimum,
    /// in original scale, intercept first.
    pub fn penalized_gradient(&self, x: &Array2<f64>, labels: &[bool]) -> Result<Array1<f64>> {
        let eta = self.linear_predictor(x)?;
        let m = x.ncols();
        let resid = Array1::from_iter(
            labels
                .iter()
                .zip(eta.iter())
                .map(|(&z, &e)| (if z { 1.0 } else { 0.0 }) - sigmoid(e)),
        );
        let mut grad = Array1::zeros(m + 1);
        grad[0] = resid.sum();
        let feature_grad = x.t().dot(&resid);
        for j in 0..m {
            grad[j + 1] = feature_grad[j] - self.ridge * self.coefficients[j];
        }
        Ok(grad)
    }
}

fn penalized_log_likelihood(
    eta: &Array1<f64>,
    labels: &[bool],
    beta_orig: &Array1<f64>,
    ridge: f64,
) -> f64 {
    let mut ll = 0.0;
    for (i, &z) in labels.iter().enumerate() {
        // log p(z | eta) = z*eta - log(1 + exp(eta)), stable form.
        let e = eta[i];
        let log1pexp = if e > 0.0 { e + (-e).exp().ln_1p() } else { e.exp().ln_1p() };
        ll += (if z { e } else { 0.0 }) - log1pexp;
    }
    ll - 0.5 * ridge * beta_orig.dot(beta_orig)
}

/// Fit a logistic model of `labels` on the rows of `x`.
///
/// Returns a model with `converged = false` when the gradient norm never
/// drops to the tolerance within `max_iter` Newton steps.
pub fn fit_logistic(x: &Array2<f64>, labels: &[bool], settings: &LogisticSettings) -> Result<LogisticModel> {
    let n = x.nrows();
    let m = x.ncols();
    if labels.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} rows but {} labels",
            labels.len()
        )));
    }
    let positives = labels.iter().filter(|&&z| z).count();
    if positives == 0 || positives == n {
        return Err(Error::Degenerate(
            "logistic fit needs both classes present".into(),
        ));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("logistic fit needs finite features".into()));
    }
    if !(settings.ridge >= 0.0) {
        return Err(Error::Config("ridge must be >= 0".into()));
    }

    // Standardize columns; constant columns keep scale 1.
    let mut means = Array1::zeros(m);
    let mut scales = Array1::ones(m);
    for j in 0..m {
        let mean = x.column(j).sum() / n as f64;
        means[j] = mean;
        if n > 1 {
            let var = x.column(j).iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / (n as f64 - 1.0);
            if var > 0.0 {
                scales[j] = var.sqrt();
            }
        }
    }
    let xs = {
        let mut xs = x.clone();
        for j in 0..m {
            let (mu, sd) = (means[j], scales[j]);
            for v in xs.column_mut(j).iter_mut() {
                *v = (*v - mu) / sd;
            }
        }
        xs
    };

    // Penalty on the original coefficients expressed in standardized
    // coordinates: beta_orig_j = beta_std_j / scale_j.
    let penalty: Vec<f64> = (0..m).map(|j| settings.ridge / (scales[j] * scales[j])).collect();
    let z = Array1::from_iter(labels.iter().map(|&z| if z { 1.0 } else { 0.0 }));

    // Standardized design with a leading intercept column.
    let mut design = Array2::<f64>::ones((n, m + 1));
    design.slice_mut(ndarray::s![.., 1..]).assign(&xs);

    let mut beta = Array1::<f64>::zeros(m + 1); // intercept first, standardized scale
    let to_original = |beta: &Array1<f64>| -> (f64, Array1<f64>) {
        let coef = Array1::from_shape_fn(m, |j| beta[j + 1] / scales[j]);
        let intercept = beta[0] - (0..m).map(|j| beta[j + 1] * means[j] / scales[j]).sum::<f64>();
        (intercept, coef)
    };

    let mut converged = false;
    let mut iterations = 0;
    let mut eta = design.dot(&beta);
    for iter in 0..settings.max_iter {
        iterations = iter;
        // Gradient in original scale decides convergence; the invariant
        // on the returned model is stated there.
        let (intercept, coef) = to_original(&beta);
        let probe = LogisticModel {
            coefficients: coef.clone(),
            intercept,
            ridge: settings.ridge,
            converged: false,
            iterations,
            feature_means: means.clone(),
            feature_scales: scales.clone(),
        };
        let grad_orig = probe.penalized_gradient(x, labels)?;
        if grad_orig.dot(&grad_orig).sqrt() <= settings.tol {
            converged = true;
            break;
        }

        // Newton step in standardized coordinates.
        let p = eta.mapv(sigmoid);
        let mut grad = design.t().dot(&(&z - &p));
        for j in 0..m {
            grad[j + 1] -= penalty[j] * beta[j + 1];
        }
        let w = p.mapv(|pi| (pi * (1.0 - pi)).max(1e-12));
        let weighted = &design * &w.view().insert_axis(ndarray::Axis(1));
        let mut hess = design.t().dot(&weighted);
        for j in 0..m {
            hess[[j + 1, j + 1]] += penalty[j];
        }
        let step = match crate::linalg::solve_spd(&hess, &grad) {
            Some(s) => s,
            None => {
                // Singular Hessian (collinear features at ridge 0): fall
                // back to the minimum-norm least-squares step.
                let g2 = grad.clone().insert_axis(ndarray::Axis(1));
                let sol = crate::linalg::pinv(&hess, 1e-12).dot(&g2);
                sol.column(0).to_owned()
            }
        };

        // Halve the step until the penalized objective improves.
        let obj_now = penalized_log_likelihood(&eta, labels, &coef, settings.ridge);
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let candidate = &beta + &(&step * scale);
            let eta_cand = design.dot(&candidate);
            let (_, coef_cand) = to_original(&candidate);
            let obj_cand = penalized_log_likelihood(&eta_cand, labels, &coef_cand, settings.ridge);
            if obj_cand.is_finite() && obj_cand > obj_now {
                beta = candidate;
                eta = eta_cand;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            // No ascent direction left at this precision.
            break;
        }
    }

    let (intercept, coefficients) = to_original(&beta);
    Ok(LogisticModel {
        coefficients,
        intercept,
        ridge: settings.ridge,
        converged,
        iterations,
        feature_means: means,
        feature_scales: scales,
    })
}

/// Propensity scores keyed by sample id, clamped into the open unit
/// interval.
#[derive(Debug, Clone, PartialEq)]
pub struct PropensityScores {
    scores: BTreeMap<u64, f64>,
}

pub(crate) const SCORE_CLAMP: f64 = 1e-12;

impl PropensityScores {
    pub fn new(scores: BTreeMap<u64, f64>) -> Result<Self> {
        for (&id, &s) in &scores {
            if !(s > 0.0 && s < 1.0) {
                return Err(Error::Domain(format!(
                    "propensity score for id {id} is {s}, outside (0, 1)"
                )));
            }
        }
        Ok(PropensityScores { scores })
    }

    pub fn get(&self, id: u64) -> Option<f64> {
        self.scores.get(&id).copied()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.scores.iter().map(|(&id, &s)| (id, s))
    }

    pub fn as_map(&self) -> &BTreeMap<u64, f64> {
        &self.scores
    }
}

/// Score every row of `x` under the model, keyed by the parallel `ids`.
pub fn predict_propensity(model: &LogisticModel, x: &Array2<f64>, ids: &[u64]) -> Result<PropensityScores> {
    if ids.len() != x.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} rows but {} ids",
            x.nrows(),
            ids.len()
        )));
    }
    let eta = model.linear_predictor(x)?;
    let mut scores = BTreeMap::new();
    for (i, &id) in ids.iter().enumerate() {
        let s = sigmoid(eta[i]).clamp(SCORE_CLAMP, 1.0 - SCORE_CLAMP);
        if scores.insert(id, s).is_some() {
            return Err(Error::Domain(format!("duplicate id {id} in prediction")));
        }
    }
    PropensityScores::new(scores)
}
