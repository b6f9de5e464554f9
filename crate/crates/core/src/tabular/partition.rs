//! Partitioning a population into party shards: IID, quantity-skewed,
//! label-ratio-skewed, and covariate-cluster schemes.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{kmeans, PartyDataset, Population};
use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionScheme {
    /// Uniform random split into `parts` shards of near-equal size.
    Iid { parts: usize },
    /// Random split with shard sizes proportional to `fractions`.
    Quantity { fractions: Vec<f64> },
    /// Near-equal shard sizes with per-shard treated counts fixed to
    /// round(fraction * n). Treated samples beyond the total requirement
    /// are left out of every shard.
    LabelRatio { treated_fractions: Vec<f64> },
    /// Shards are k-means clusters of the standardized covariates
    /// projected to two principal directions.
    Cluster { k: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub scheme: PartitionScheme,
    pub seed: u64,
}

impl PartitionSpec {
    pub fn validate(&self) -> Result<()> {
        match &self.scheme {
            PartitionScheme::Iid { parts } => {
                if *parts < 2 {
                    return Err(Error::Config("iid partition needs parts >= 2".into()));
                }
            }
            PartitionScheme::Quantity { fractions } => {
                if fractions.len() < 2 {
                    return Err(Error::Config("quantity partition needs >= 2 fractions".into()));
                }
                if fractions.iter().any(|&f| !(f > 0.0)) {
                    return Err(Error::Config("quantity fractions must be positive".into()));
                }
                let total: f64 = fractions.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::Config(format!(
                        "quantity fractions must sum to 1, got {total}"
                    )));
                }
            }
            PartitionScheme::LabelRatio { treated_fractions } => {
                if treated_fractions.len() < 2 {
                    return Err(Error::Config("label_ratio partition needs >= 2 fractions".into()));
                }
                if treated_fractions.iter().any(|&f| !(f > 0.0)) {
                    return Err(Error::Config("label_ratio fractions must be positive".into()));
                }
            }
            PartitionScheme::Cluster { k } => {
                if *k < 2 {
                    return Err(Error::Config("cluster partition needs k >= 2".into()));
                }
            }
        }
        Ok(())
    }

    pub fn party_count(&self) -> usize {
        match &self.scheme {
            PartitionScheme::Iid { parts } => *parts,
            PartitionScheme::Quantity { fractions } => fractions.len(),
            PartitionScheme::LabelRatio { treated_fractions } => treated_fractions.len(),
            PartitionScheme::Cluster { k } => *k,
        }
    }
}

/// Split a population into disjoint party shards per the scheme.
pub fn partition(pop: &Population, spec: &PartitionSpec) -> Result<Vec<PartyDataset>> {
    spec.validate()?;
    let groups = match &spec.scheme {
        PartitionScheme::Iid { parts } => split_iid(pop, *parts, spec.seed)?,
        PartitionScheme::Quantity { fractions } => split_quantity(pop, fractions, spec.seed)?,
        PartitionScheme::LabelRatio { treated_fractions } => {
            split_label_ratio(pop, treated_fractions, spec.seed)?
        }
        PartitionScheme::Cluster { k } => split_cluster(pop, *k, spec.seed)?,
    };
    Ok(groups
        .into_iter()
        .enumerate()
        .map(|(party_id, mut rows)| {
            rows.sort_unstable();
            PartyDataset {
                party_id,
                population: pop.select_rows(&rows),
            }
        })
        .collect())
}

fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    idx
}

fn split_iid(pop: &Population, parts: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let n = pop.n();
    if n < parts {
        return Err(Error::Degenerate(format!(
            "cannot split {n} samples into {parts} non-empty shards"
        )));
    }
    let idx = shuffled_indices(n, derive_seed(seed, &[0x70]));
    let base = n / parts;
    let extra = n % parts;
    let mut out = Vec::with_capacity(parts);
    let mut cursor = 0;
    for p in 0..parts {
        let size = base + usize::from(p < extra);
        out.push(idx[cursor..cursor + size].to_vec());
        cursor += size;
    }
    Ok(out)
}

fn split_quantity(pop: &Population, fractions: &[f64], seed: u64) -> Result<Vec<Vec<usize>>> {
    let n = pop.n();
    let mut sizes: Vec<i64> = fractions.iter().map(|f| (f * n as f64).round() as i64).collect();
    let assigned: i64 = sizes.iter().sum();
    let largest = fractions
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| a.partial_cmp(b).unwrap().then(ib.cmp(ia)))
        .map(|(i, _)| i)
        .expect("validated non-empty");
    sizes[largest] += n as i64 - assigned;
    if sizes.iter().any(|&s| s <= 0) {
        return Err(Error::Degenerate(format!(
            "quantity split of {n} samples leaves an empty shard (sizes {sizes:?})"
        )));
    }
    let idx = shuffled_indices(n, derive_seed(seed, &[0x71]));
    let mut out = Vec::with_capacity(sizes.len());
    let mut cursor = 0usize;
    for &s in &sizes {
        out.push(idx[cursor..cursor + s as usize].to_vec());
        cursor += s as usize;
    }
    Ok(out)
}

fn split_label_ratio(pop: &Population, fractions: &[f64], seed: u64) -> Result<Vec<Vec<usize>>> {
    let n = pop.n();
    let c = fractions.len();
    let required: Vec<usize> = fractions.iter().map(|f| (f * n as f64).round() as usize).collect();
    let total_required: usize = required.iter().sum();
    let available = pop.treated_count();
    if total_required > available {
        return Err(Error::Domain(format!(
            "label_ratio needs {total_required} treated samples but only {available} exist"
        )));
    }
    if required.iter().any(|&t| t == 0) {
        return Err(Error::Degenerate(
            "label_ratio fraction rounds to zero treated samples for a shard".into(),
        ));
    }

    let mut treated: Vec<usize> = (0..n).filter(|&i| pop.treatment()[i]).collect();
    let mut controls: Vec<usize> = (0..n).filter(|&i| !pop.treatment()[i]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x72]));
    treated.shuffle(&mut rng);
    controls.shuffle(&mut rng);

    // Treated beyond the total requirement stay out of every shard; the
    // remaining samples are spread into near-equal shards.
    let covered = n - (available - total_required);
    let base = covered / c;
    let extra = covered % c;
    let mut out = Vec::with_capacity(c);
    let mut t_cursor = 0usize;
    let mut c_cursor = 0usize;
    for (p, &t_need) in required.iter().enumerate() {
        let size = base + usize::from(p < extra);
        if t_need > size {
            return Err(Error::Domain(format!(
                "shard {p} needs {t_need} treated samples but holds only {size} rows"
            )));
        }
        let c_need = size - t_need;
        if c_cursor + c_need > controls.len() {
            return Err(Error::Domain(format!(
                "not enough control samples to fill shard {p}"
            )));
        }
        let mut rows = treated[t_cursor..t_cursor + t_need].to_vec();
        rows.extend_from_slice(&controls[c_cursor..c_cursor + c_need]);
        t_cursor += t_need;
        c_cursor += c_need;
        out.push(rows);
    }
    Ok(out)
}

fn split_cluster(pop: &Population, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let n = pop.n();
    if n < k {
        return Err(Error::Domain(format!("k = {k} exceeds {n} rows")));
    }
    let projected = project_standardized_2d(pop.covariates());
    let labels = kmeans(&projected, k, derive_seed(seed, &[0x73]))?;
    let mut out = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        out[l].push(i);
    }
    Ok(out)
}

/// Standardize columns and project onto the top principal directions
/// (two, or fewer for narrow matrices). Stands in for a nonlinear
/// embedding as the covariate-driven grouping signal.
fn project_standardized_2d(x: &Array2<f64>) -> Array2<f64> {
    let (n, m) = x.dim();
    let dims = m.min(2);
    let mut xs = x.clone();
    for j in 0..m {
        let mean = xs.column(j).sum() / n as f64;
        let var = xs.column(j).iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (n as f64 - 1.0).max(1.0);
        let sd = var.sqrt();
        for v in xs.column_mut(j).iter_mut() {
            *v = if sd > 0.0 { (*v - mean) / sd } else { 0.0 };
        }
    }
    let cov = xs.t().dot(&xs);
    let (_, vecs) = linalg::symmetric_eigen_desc(&cov);
    let proj = vecs.slice(ndarray::s![.., ..dims]).to_owned();
    xs.dot(&proj)
}
