//! Data model for populations and party shards, synthetic generation,
//! clinical feature derivation, and partitioning schemes.

mod clinical;
mod io;
mod kmeans;
mod partition;
mod schema;
mod synthetic;

pub use clinical::{ckd_stage, egfr, impute_median, Sex};
pub use io::{read_population_csv, read_schema_json, write_population_csv, write_schema_json};
pub use kmeans::{kmeans, kmeans_with, KMeansSettings};
pub use partition::{partition, PartitionScheme, PartitionSpec};
pub use schema::{Covariate, CovariateKind, CovariateSchema};
pub use synthetic::{generate_synthetic, SyntheticConfig};

use ndarray::{Array1, Array2, Axis};

use crate::error::{Error, Result};

/// A full tabular dataset: covariates, treatment, outcome, stable ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    covariates: Array2<f64>,
    treatment: Vec<bool>,
    outcome: Array1<f64>,
    ids: Vec<u64>,
    schema: CovariateSchema,
}

impl Population {
    pub fn new(
        covariates: Array2<f64>,
        treatment: Vec<bool>,
        outcome: Array1<f64>,
        ids: Vec<u64>,
        schema: CovariateSchema,
    ) -> Result<Self> {
        let n = covariates.nrows();
        if treatment.len() != n || outcome.len() != n || ids.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "rows {} vs treatment {} / outcome {} / ids {}",
                n,
                treatment.len(),
                outcome.len(),
                ids.len()
            )));
        }
        if covariates.ncols() != schema.len() {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} columns but schema declares {}",
                covariates.ncols(),
                schema.len()
            )));
        }
        let mut seen = std::collections::HashSet::with_capacity(n);
        for &id in &ids {
            if !seen.insert(id) {
                return Err(Error::Domain(format!("duplicate sample id {id}")));
            }
        }
        for (j, col) in covariates.columns().into_iter().enumerate() {
            for &v in col.iter() {
                if !v.is_finite() {
                    return Err(Error::Domain(format!(
                        "non-finite value in covariate `{}`",
                        schema.column(j).name
                    )));
                }
                if !schema.value_admissible(j, v) {
                    return Err(Error::Domain(format!(
                        "value {v} not admissible for covariate `{}`",
                        schema.column(j).name
                    )));
                }
            }
        }
        if !outcome.iter().all(|v| v.is_finite()) {
            return Err(Error::Domain("non-finite outcome value".into()));
        }
        Ok(Population {
            covariates,
            treatment,
            outcome,
            ids,
            schema,
        })
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn m(&self) -> usize {
        self.schema.len()
    }

    pub fn covariates(&self) -> &Array2<f64> {
        &self.covariates
    }

    pub fn treatment(&self) -> &[bool] {
        &self.treatment
    }

    /// Treatment indicators as 0.0 / 1.0 labels.
    pub fn treatment_f64(&self) -> Array1<f64> {
        Array1::from_iter(self.treatment.iter().map(|&t| if t { 1.0 } else { 0.0 }))
    }

    pub fn outcome(&self) -> &Array1<f64> {
        &self.outcome
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn schema(&self) -> &CovariateSchema {
        &self.schema
    }

    pub fn treated_count(&self) -> usize {
        self.treatment.iter().filter(|&&t| t).count()
    }

    /// New population from a subset of rows, keeping the original ids.
    pub fn select_rows(&self, rows: &[usize]) -> Population {
        Population {
            covariates: self.covariates.select(Axis(0), rows),
            treatment: rows.iter().map(|&i| self.treatment[i]).collect(),
            outcome: Array1::from_iter(rows.iter().map(|&i| self.outcome[i])),
            ids: rows.iter().map(|&i| self.ids[i]).collect(),
            schema: self.schema.clone(),
        }
    }

    /// New population from (possibly repeated) rows, with fresh
    /// sequential ids. Used for bootstrap resamples, whose rows would
    /// otherwise carry duplicate ids.
    pub fn reindexed_rows(&self, rows: &[usize]) -> Population {
        Population {
            covariates: self.covariates.select(Axis(0), rows),
            treatment: rows.iter().map(|&i| self.treatment[i]).collect(),
            outcome: Array1::from_iter(rows.iter().map(|&i| self.outcome[i])),
            ids: (0..rows.len() as u64).collect(),
            schema: self.schema.clone(),
        }
    }

    /// Per-column (min, max) over all rows.
    pub fn column_bounds(&self) -> Vec<(f64, f64)> {
        (0..self.m())
            .map(|j| {
                let col = self.covariates.column(j);
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for &v in col.iter() {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                (lo, hi)
            })
            .collect()
    }
}

/// One party's shard of a parent population.
#[derive(Debug, Clone)]
pub struct PartyDataset {
    pub party_id: usize,
    pub population: Population,
}


#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn schema2() -> CovariateSchema {
        CovariateSchema::new(vec![
            Covariate::continuous("a", None),
            Covariate::binary("b"),
        ])
        .unwrap()
    }

    #[test]
    fn rejects_mismatched_lengths() {
        let x = array![[0.0, 1.0], [1.0, 0.0]];
        let err = Population::new(
            x,
            vec![true],
            array![0.0, 1.0],
            vec![0, 1],
            schema2(),
        );
        assert!(matches!(err, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn rejects_duplicate_ids() {
        let x = array![[0.0, 1.0], [1.0, 0.0]];
        let err = Population::new(
            x,
            vec![true, false],
            array![0.0, 1.0],
            vec![7, 7],
            schema2(),
        );
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn rejects_non_binary_value_in_binary_column() {
        let x = array![[0.0, 0.5]];
        let err = Population::new(x, vec![true], array![0.0], vec![0], schema2());
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn select_keeps_ids_and_reindex_renumbers() {
        let pop = testutil::tiny_population(6, 3);
        let sel = pop.select_rows(&[4, 1]);
        assert_eq!(sel.ids(), &[4, 1]);
        let re = pop.reindexed_rows(&[4, 4, 1]);
        assert_eq!(re.ids(), &[0, 1, 2]);
        assert_eq!(re.covariates().row(0), re.covariates().row(1));
    }
}
