//! Bootstrap reducer: columns are unit-normalized propensity-model
//! coefficient vectors, each fitted on a without-replacement resample of
//! the local data.

use ndarray::{Array1, Array2};
use rand::seq::index::sample;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{LinearReducer, MethodTag};
use crate::causal::{fit_logistic, LogisticSettings};
use crate::error::{Error, Result};
use crate::rng::derive_seed;

#[derive(Debug, Clone)]
pub struct BootstrapReducerConfig {
    /// Number of coefficient columns to build.
    pub output_dim: usize,
    /// Fraction of local rows per resample, in (0, 1].
    pub sampling_ratio: f64,
    pub seed: u64,
    pub logistic: LogisticSettings,
    /// Resamples missing a class are redrawn up to this many times.
    pub max_retries: usize,
}

impl Default for BootstrapReducerConfig {
    fn default() -> Self {
        BootstrapReducerConfig {
            output_dim: 1,
            sampling_ratio: 0.5,
            seed: 0,
            logistic: LogisticSettings::default(),
            max_retries: 50,
        }
    }
}

/// Fit the bootstrap reducer of `z` on `x`. Intercepts are excluded so
/// the projection matches the covariate space; columns are normalized to
/// unit Euclidean norm, which preserves their span.
pub fn fit_bootstrap_reducer(
    x: &Array2<f64>,
    z: &[bool],
    cfg: &BootstrapReducerConfig,
) -> Result<LinearReducer> {
    let (n, m) = x.dim();
    if z.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} rows but {} labels",
            z.len()
        )));
    }
    if cfg.output_dim == 0 {
        return Err(Error::Config("bootstrap reducer needs output_dim >= 1".into()));
    }
    if !(cfg.sampling_ratio > 0.0 && cfg.sampling_ratio <= 1.0) {
        return Err(Error::Config(format!(
            "sampling ratio must be in (0, 1], got {}",
            cfg.sampling_ratio
        )));
    }
    let positives = z.iter().filter(|&&v| v).count();
    if positives == 0 || positives == n {
        return Err(Error::Degenerate("bootstrap reducer needs both classes".into()));
    }
    let draw = ((cfg.sampling_ratio * n as f64).ceil() as usize).min(n);
    if draw < 2 {
        return Err(Error::Config(format!(
            "sampling ratio {} of {n} rows draws fewer than 2 samples",
            cfg.sampling_ratio
        )));
    }

    let mut projection = Array2::zeros((m, cfg.output_dim));
    for s in 0..cfg.output_dim {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[0x6273, s as u64]));
        let mut fitted = None;
        for _ in 0..=cfg.max_retries {
            // Sorted indices make the resample independent of draw order.
            let mut rows: Vec<usize> = sample(&mut rng, n, draw).into_vec();
            rows.sort_unstable();
            let labels: Vec<bool> = rows.iter().map(|&i| z[i]).collect();
            let pos = labels.iter().filter(|&&v| v).count();
            if pos == 0 || pos == labels.len() {
                continue;
            }
            let sub = x.select(ndarray::Axis(0), &rows);
            let model = fit_logistic(&sub, &labels, &cfg.logistic)?;
            let norm = model.coefficients.dot(&model.coefficients).sqrt();
            if norm == 0.0 {
                continue;
            }
            fitted = Some(model.coefficients.mapv(|v| v / norm));
            break;
        }
        let column = fitted.ok_or_else(|| {
            Error::Degenerate(format!(
                "resample {s} kept missing a class (or fitting a null model) after {} retries",
                cfg.max_retries
            ))
        })?;
        projection.column_mut(s).assign(&column);
    }

    let center = Array1::from_shape_fn(m, |j| x.column(j).sum() / n as f64);
    LinearReducer::new(projection, center, MethodTag::Bootstrap)
}
