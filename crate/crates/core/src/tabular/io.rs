//! CSV ingestion and emission for populations, with a JSON schema
//! sidecar declaring column kinds and units.
//!
//! Layout: header row of covariate names plus the reserved columns
//! `__id`, `__treatment`, `__outcome`; UTF-8; `.` decimal separator; an
//! empty field is a missing value (imputed by column median on load).

use std::path::Path;

use ndarray::{Array1, Array2};

use super::{impute_median, CovariateSchema, Population};
use crate::error::{Error, Result};

const ID_COL: &str = "__id";
const TREATMENT_COL: &str = "__treatment";
const OUTCOME_COL: &str = "__outcome";

pub fn write_schema_json(schema: &CovariateSchema, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(schema)?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_schema_json(path: &Path) -> Result<CovariateSchema> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_population_csv(pop: &Population, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec![ID_COL.to_string(), TREATMENT_COL.to_string(), OUTCOME_COL.to_string()];
    header.extend(pop.schema().names().iter().map(|s| s.to_string()));
    writer.write_record(&header)?;
    for i in 0..pop.n() {
        let mut record = vec![
            pop.ids()[i].to_string(),
            if pop.treatment()[i] { "1" } else { "0" }.to_string(),
            format!("{}", pop.outcome()[i]),
        ];
        for j in 0..pop.m() {
            record.push(format!("{}", pop.covariates()[[i, j]]));
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Load a population from a CSV file and its schema sidecar. Covariate
/// columns are matched by name; empty fields become missing values and
/// are median-imputed before validation.
pub fn read_population_csv(csv_path: &Path, schema_path: &Path) -> Result<Population> {
    let schema = read_schema_json(schema_path)?;
    let mut reader = csv::Reader::from_path(csv_path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();

    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("csv is missing required column `{name}`")))
    };
    let id_idx = find(ID_COL)?;
    let treatment_idx = find(TREATMENT_COL)?;
    let outcome_idx = find(OUTCOME_COL)?;
    let covariate_idx: Vec<usize> = schema
        .names()
        .iter()
        .map(|name| find(name))
        .collect::<Result<_>>()?;

    let reserved = [ID_COL, TREATMENT_COL, OUTCOME_COL];
    for h in &headers {
        if !reserved.contains(&h.as_str()) && !schema.names().contains(&h.as_str()) {
            return Err(Error::Config(format!(
                "csv column `{h}` is not declared in the schema"
            )));
        }
    }

    let mut ids = Vec::new();
    let mut treatment = Vec::new();
    let mut outcome = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let field = |idx: usize| -> &str { record.get(idx).unwrap_or("") };
        let id: u64 = field(id_idx)
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("row {line}: bad `__id` value `{}`", field(id_idx))))?;
        let z = match field(treatment_idx).trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Config(format!(
                    "row {line}: `__treatment` must be 0 or 1, got `{other}`"
                )))
            }
        };
        let y: f64 = field(outcome_idx).trim().parse().map_err(|_| {
            Error::Config(format!(
                "row {line}: bad `__outcome` value `{}`",
                field(outcome_idx)
            ))
        })?;
        let mut row = Vec::with_capacity(covariate_idx.len());
        for (&idx, name) in covariate_idx.iter().zip(schema.names()) {
            let raw = field(idx).trim();
            if raw.is_empty() {
                row.push(f64::NAN);
            } else {
                row.push(raw.parse().map_err(|_| {
                    Error::Config(format!("row {line}: bad value `{raw}` in column `{name}`"))
                })?);
            }
        }
        ids.push(id);
        treatment.push(z);
        outcome.push(y);
        rows.push(row);
    }

    let n = rows.len();
    let m = schema.len();
    let mut x = Array2::zeros((n, m));
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            x[[i, j]] = v;
        }
    }
    let x = impute_median(&x)?;
    Population::new(x, treatment, Array1::from_vec(outcome), ids, schema)
}
