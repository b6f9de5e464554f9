//! Covariate schemas: per-column names, kinds, and units.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Statistical kind of a covariate column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateKind {
    Continuous,
    Binary,
    /// Integer-coded column restricted to the declared levels.
    Ordinal { levels: Vec<i64> },
}

/// One covariate column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Covariate {
    pub name: String,
    pub kind: CovariateKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
}

impl Covariate {
    pub fn continuous(name: &str, unit: Option<&str>) -> Self {
        Covariate {
            name: name.to_string(),
            kind: CovariateKind::Continuous,
            unit: unit.map(str::to_string),
        }
    }

    pub fn binary(name: &str) -> Self {
        Covariate {
            name: name.to_string(),
            kind: CovariateKind::Binary,
            unit: None,
        }
    }

    pub fn ordinal(name: &str, levels: Vec<i64>) -> Self {
        Covariate {
            name: name.to_string(),
            kind: CovariateKind::Ordinal { levels },
            unit: None,
        }
    }
}

/// Ordered roster of covariates with unique names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Covariate>", into = "Vec<Covariate>")]
pub struct CovariateSchema {
    columns: Vec<Covariate>,
}

impl TryFrom<Vec<Covariate>> for CovariateSchema {
    type Error = Error;
    fn try_from(columns: Vec<Covariate>) -> Result<Self> {
        CovariateSchema::new(columns)
    }
}

impl From<CovariateSchema> for Vec<Covariate> {
    fn from(s: CovariateSchema) -> Self {
        s.columns
    }
}

impl CovariateSchema {
    pub fn new(columns: Vec<Covariate>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.clone()) {
                return Err(Error::Config(format!("duplicate covariate name `{}`", c.name)));
            }
            if let CovariateKind::Ordinal { levels } = &c.kind {
                if levels.is_empty() {
                    return Err(Error::Config(format!(
                        "ordinal covariate `{}` declares no levels",
                        c.name
                    )));
                }
                let mut uniq = levels.clone();
                uniq.sort_unstable();
                uniq.dedup();
                if uniq.len() != levels.len() {
                    return Err(Error::Config(format!(
                        "ordinal covariate `{}` has duplicate levels",
                        c.name
                    )));
                }
            }
        }
        Ok(CovariateSchema { columns })
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn columns(&self) -> &[Covariate] {
        &self.columns
    }

    pub fn column(&self, idx: usize) -> &Covariate {
        &self.columns[idx]
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    /// Check one value against the column's declared kind.
    pub fn value_admissible(&self, col: usize, value: f64) -> bool {
        match &self.columns[col].kind {
            CovariateKind::Continuous => value.is_finite(),
            CovariateKind::Binary => value == 0.0 || value == 1.0,
            CovariateKind::Ordinal { levels } => {
                value.is_finite()
                    && value.fract() == 0.0
                    && levels.contains(&(value as i64))
            }
        }
    }

    /// Default 22-column clinical roster: nine binary medication flags,
    /// one ordinal kidney-disease stage, twelve continuous measurements.
    pub fn clinical_default() -> Self {
        let mut cols: Vec<Covariate> = [
            "diuretic",
            "beta_adrenergic_antagonist",
            "ras_inhibitor",
            "antipurine",
            "alkalizer",
            "nsaid",
            "aspirin",
            "corticosteroid",
            "colchicine",
        ]
        .iter()
        .map(|n| Covariate::binary(n))
        .collect();
        cols.push(Covariate::ordinal("ckd_stage", vec![1, 2, 3, 4, 5]));
        for (name, unit) in [
            ("hdl_cholesterol", Some("mg/dl")),
            ("hemoglobin_a1c", Some("%")),
            ("egfr", Some("ml/min/1.73m2")),
            ("albumin", Some("mg/dl")),
            ("creatinine", Some("mg/dl")),
            ("triglycerides", Some("mg/dl")),
            ("serum_uric_acid", Some("mg/dl")),
            ("age", None),
            ("sex", None),
            ("hemoglobin", Some("g/dl")),
            ("urine_ph", None),
            ("urine_occult_blood", None),
        ] {
            cols.push(Covariate::continuous(name, unit));
        }
        CovariateSchema::new(cols).expect("default schema is valid")
    }
}
