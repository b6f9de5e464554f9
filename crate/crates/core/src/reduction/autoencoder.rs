//! One-hidden-layer autoencoder trained by full-batch gradient descent
//! with a halve-on-increase step rule, so the loss never goes up.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::NonlinearReducer;
use crate::error::{Error, Result};

struct Params {
    w1: Array2<f64>, // hidden x m
    b1: Array1<f64>,
    w2: Array2<f64>, // m x hidden
    b2: Array1<f64>,
}

fn forward(xs: &Array2<f64>, p: &Params) -> (Array2<f64>, Array2<f64>, f64) {
    let n = xs.nrows();
    let hidden = (xs.dot(&p.w1.t()) + &p.b1.view().insert_axis(ndarray::Axis(0))).mapv(f64::tanh);
    let recon = hidden.dot(&p.w2.t()) + &p.b2.view().insert_axis(ndarray::Axis(0));
    let loss = (&recon - xs).iter().map(|d| d * d).sum::<f64>() / (n * xs.ncols()) as f64;
    (hidden, recon, loss)
}

/// Train an encoder from `m` covariates down to `out_dim` tanh units.
/// The decoder is discarded after training. Deterministic under `seed`.
pub fn fit_autoencoder(
    x: &Array2<f64>,
    out_dim: usize,
    epochs: usize,
    learning_rate: f64,
    seed: u64,
) -> Result<NonlinearReducer> {
    let (n, m) = x.dim();
    if n < 2 {
        return Err(Error::Domain("autoencoder needs at least two rows".into()));
    }
    if out_dim == 0 || out_dim >= m {
        return Err(Error::DimensionMismatch(format!(
            "autoencoder needs 0 < out_dim < m, got out_dim = {out_dim}, m = {m}"
        )));
    }
    if !(learning_rate > 0.0) {
        return Err(Error::Config("learning rate must be positive".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("autoencoder needs finite inputs".into()));
    }

    // Standardize columns; constant columns keep scale 1.
    let mut means = Array1::zeros(m);
    let mut scales = Array1::ones(m);
    for j in 0..m {
        let mean = x.column(j).sum() / n as f64;
        means[j] = mean;
        let var = x.column(j).iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (n as f64 - 1.0);
        if var > 0.0 {
            scales[j] = var.sqrt();
        }
    }
    let mut xs = x.clone();
    for j in 0..m {
        for v in xs.column_mut(j).iter_mut() {
            *v = (*v - means[j]) / scales[j];
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a1 = 1.0 / (m as f64).sqrt();
    let a2 = 1.0 / (out_dim as f64).sqrt();
    let mut params = Params {
        w1: Array2::from_shape_fn((out_dim, m), |_| rng.random_range(-a1..a1)),
        b1: Array1::zeros(out_dim),
        w2: Array2::from_shape_fn((m, out_dim), |_| rng.random_range(-a2..a2)),
        b2: Array1::zeros(m),
    };

    let (_, _, mut loss) = forward(&xs, &params);
    if !loss.is_finite() {
        return Err(Error::Solver(
            "autoencoder loss diverged at initialization; try a smaller learning rate".into(),
        ));
    }
    let mut lr = learning_rate;
    let mut epochs_run = 0;
    let scale_denom = (n * m) as f64;
    for _ in 0..epochs {
        epochs_run += 1;
        let (hidden, recon, _) = forward(&xs, &params);
        // Mean-squared-error gradients.
        let d_recon = (&recon - &xs).mapv(|v| 2.0 * v / scale_denom);
        let g_w2 = d_recon.t().dot(&hidden);
        let g_b2 = d_recon.sum_axis(ndarray::Axis(0));
        let d_hidden = d_recon.dot(&params.w2);
        let d_pre = &d_hidden * &hidden.mapv(|h| 1.0 - h * h);
        let g_w1 = d_pre.t().dot(&xs);
        let g_b1 = d_pre.sum_axis(ndarray::Axis(0));

        let candidate = Params {
            w1: &params.w1 - &(&g_w1 * lr),
            b1: &params.b1 - &(&g_b1 * lr),
            w2: &params.w2 - &(&g_w2 * lr),
            b2: &params.b2 - &(&g_b2 * lr),
        };
        let (_, _, cand_loss) = forward(&xs, &candidate);
        if !cand_loss.is_finite() {
            return Err(Error::Solver(
                "autoencoder loss diverged during training; try a smaller learning rate".into(),
            ));
        }
        if cand_loss < loss {
            params = candidate;
            loss = cand_loss;
        } else {
            lr *= 0.5;
            if lr < 1e-15 {
                break;
            }
        }
    }

    Ok(NonlinearReducer {
        weights: params.w1,
        biases: params.b1,
        input_means: means,
        input_scales: scales,
        final_loss: loss,
        epochs_run,
    })
}
