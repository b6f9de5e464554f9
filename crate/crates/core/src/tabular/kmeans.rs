//! Lloyd's k-means with k-means++ seeding, restarts, and deterministic
//! tie-breaking throughout.

use ndarray::{Array2, ArrayView1};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy)]
pub struct KMeansSettings {
    pub restarts: usize,
    pub max_iter: usize,
    /// Convergence threshold on centroid movement.
    pub tol: f64,
}

impl Default for KMeansSettings {
    fn default() -> Self {
        KMeansSettings {
            restarts: 10,
            max_iter: 100,
            tol: 1e-8,
        }
    }
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Cluster rows of `x` into `k` groups; labels in 0..k, every cluster
/// non-empty, deterministic under `seed`.
pub fn kmeans(x: &Array2<f64>, k: usize, seed: u64) -> Result<Vec<usize>> {
    kmeans_with(x, k, seed, KMeansSettings::default())
}

pub fn kmeans_with(
    x: &Array2<f64>,
    k: usize,
    seed: u64,
    settings: KMeansSettings,
) -> Result<Vec<usize>> {
    let n = x.nrows();
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if n < k {
        return Err(Error::Domain(format!("k = {k} exceeds {n} rows")));
    }
    if k == 1 {
        return Ok(vec![0; n]);
    }

    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut last_err = None;
    for restart in 0..settings.restarts.max(1) {
        let run_seed = derive_seed(seed, &[0x6b6d, restart as u64]);
        match lloyd_once(x, k, run_seed, settings) {
            Ok((wcss, labels)) => {
                let better = match &best {
                    None => true,
                    Some((best_wcss, _)) => wcss < *best_wcss,
                };
                if better {
                    best = Some((wcss, labels));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match best {
        Some((_, labels)) => Ok(labels),
        None => Err(last_err.unwrap_or_else(|| Error::Solver("k-means produced no run".into()))),
    }
}

fn lloyd_once(
    x: &Array2<f64>,
    k: usize,
    seed: u64,
    settings: KMeansSettings,
) -> Result<(f64, Vec<usize>)> {
    let n = x.nrows();
    let m = x.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding: first centroid uniform, then D^2 sampling.
    let mut centroids = Array2::zeros((k, m));
    let first = rng.random_range(0..n);
    centroids.row_mut(0).assign(&x.row(first));
    let mut min_d2: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), centroids.row(0))).collect();
    for c in 1..k {
        let total: f64 = min_d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random_range(0.0..1.0) * total;
            let mut chosen = n - 1;
            for (i, &d) in min_d2.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            // All points coincide with chosen centroids; any row works.
            rng.random_range(0..n)
        };
        centroids.row_mut(c).assign(&x.row(pick));
        for i in 0..n {
            let d = sq_dist(x.row(i), centroids.row(c));
            if d < min_d2[i] {
                min_d2[i] = d;
            }
        }
    }

    let mut labels = vec![0usize; n];
    let mut converged = false;
    let mut movement = f64::INFINITY;
    for _ in 0..settings.max_iter {
        // Assignment; ties to the lowest cluster index.
        for i in 0..n {
            let mut best_c = 0;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                let d = sq_dist(x.row(i), centroids.row(c));
                if d < best_d {
                    best_d = d;
                    best_c = c;
                }
            }
            labels[i] = best_c;
        }

        // Update.
        let mut sums = Array2::<f64>::zeros((k, m));
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            for j in 0..m {
                sums[[labels[i], j]] += x[[i, j]];
            }
        }
        // Re-seed any emptied cluster with the point farthest from its
        // current centroid (lowest index on ties).
        for c in 0..k {
            if counts[c] == 0 {
                let mut far_i = 0;
                let mut far_d = -1.0;
                for i in 0..n {
                    if counts[labels[i]] <= 1 {
                        continue;
                    }
                    let d = sq_dist(x.row(i), centroids.row(labels[i]));
                    if d > far_d {
                        far_d = d;
                        far_i = i;
                    }
                }
                let old = labels[far_i];
                counts[old] -= 1;
                for j in 0..m {
                    sums[[old, j]] -= x[[far_i, j]];
                }
                labels[far_i] = c;
                counts[c] = 1;
                for j in 0..m {
                    sums[[c, j]] = x[[far_i, j]];
                }
            }
        }

        movement = 0.0;
        for c in 0..k {
            let mut d2 = 0.0;
            for j in 0..m {
                let new = sums[[c, j]] / counts[c] as f64;
                let diff = new - centroids[[c, j]];
                d2 += diff * diff;
                centroids[[c, j]] = new;
            }
            movement = movement.max(d2.sqrt());
        }
        if movement <= settings.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Solver(format!(
            "k-means did not converge within {} iterations (last centroid movement {movement:.3e}, tol {:.1e})",
            settings.max_iter, settings.tol
        )));
    }

    // Final assignment against the converged centroids.
    let mut wcss = 0.0;
    for i in 0..n {
        let mut best_c = 0;
        let mut best_d = f64::INFINITY;
        for c in 0..k {
            let d = sq_dist(x.row(i), centroids.row(c));
            if d < best_d {
                best_d = d;
                best_c = c;
            }
        }
        labels[i] = best_c;
        wcss += best_d;
    }
    let mut non_empty = vec![false; k];
    for &l in &labels {
        non_empty[l] = true;
    }
    if non_empty.iter().any(|&b| !b) {
        return Err(Error::Solver("k-means ended with an empty cluster".into()));
    }
    Ok((wcss, labels))
}
