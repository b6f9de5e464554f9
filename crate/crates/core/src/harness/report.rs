//! Report structures and their file formats: a long-format summary, a
//! per-replicate table, the configuration echo, and provenance.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::error::{Error, Result};

/// Analysis arm identity. Ordering puts the centralized arm first, then
/// single-party arms, then collaborations by size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ArmTag {
    /// Centralized analysis over the pooled raw data.
    Ca,
    /// Individual analysis on one party's shard (1-based).
    Ia(usize),
    /// Data collaboration across the first `c` parties.
    Dcqe(usize),
}

impl fmt::Display for ArmTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArmTag::Ca => write!(f, "CA"),
            ArmTag::Ia(k) => write!(f, "IA_{k}"),
            ArmTag::Dcqe(c) => write!(f, "DCQE_{c}"),
        }
    }
}

impl FromStr for ArmTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "CA" {
            return Ok(ArmTag::Ca);
        }
        if let Some(rest) = s.strip_prefix("IA_") {
            return rest
                .parse()
                .map(ArmTag::Ia)
                .map_err(|_| Error::Config(format!("bad arm tag `{s}`")));
        }
        if let Some(rest) = s.strip_prefix("DCQE_") {
            return rest
                .parse()
                .map(ArmTag::Dcqe)
                .map_err(|_| Error::Config(format!("bad arm tag `{s}`")));
        }
        Err(Error::Config(format!("bad arm tag `{s}`")))
    }
}

/// Metrics of one arm in one replicate, or the reason it failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmOutcome {
    Ok {
        att: f64,
        n_pairs: usize,
        unmatched_treated: usize,
        /// Samples the arm scored (shard size for single-party arms).
        n_scored: usize,
        inconsistency: f64,
        masmd: f64,
        mjd: f64,
    },
    Failed {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmRecord {
    pub arm: ArmTag,
    pub outcome: ArmOutcome,
}

/// Everything retained from one bootstrap replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    /// Hash of the resampled id list; equal across arms by construction.
    pub resample_hash: u64,
    /// Covariate imbalance of the whole resample before any matching.
    pub pre_match_masmd: f64,
    pub arms: Vec<ArmRecord>,
}

/// One summary line: a metric for an arm, aggregated over replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub arm: ArmTag,
    pub metric: String,
    pub value: Option<f64>,
    /// Standard error over replicates; absent for the gap (one number
    /// over all replicates) and for single-replicate aggregates.
    pub se: Option<f64>,
    pub n_replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
}

impl SummaryTable {
    pub fn value(&self, arm: ArmTag, metric: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.arm == arm && r.metric == metric)
            .and_then(|r| r.value)
    }

    pub fn arms(&self) -> Vec<ArmTag> {
        let mut arms: Vec<ArmTag> = self.rows.iter().map(|r| r.arm).collect();
        arms.sort();
        arms.dedup();
        arms
    }
}

/// Run provenance: everything needed to interpret and reproduce the
/// outputs, and the documented deviations taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub version: String,
    pub deviations: Vec<String>,
    /// Replicates excluded from each arm's aggregates, by arm tag.
    pub exclusions: std::collections::BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub replicates: Vec<ReplicateRecord>,
    pub summary: SummaryTable,
    pub provenance: Provenance,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn parse_opt(s: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        s.parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("bad numeric field `{s}`")))
    }
}

impl ExperimentReport {
    /// Write `summary.csv`, `replicates.csv`, `config.json`, and
    /// `provenance.json` under `dir`. Output is byte-deterministic for a
    /// given report.
    pub fn emit(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;

        let mut summary = csv::Writer::from_path(dir.join("summary.csv"))?;
        summary.write_record(["arm", "metric", "value", "se", "n_replicates"])?;
        for row in &self.summary.rows {
            summary.write_record([
                row.arm.to_string(),
                row.metric.clone(),
                fmt_opt(row.value),
                fmt_opt(row.se),
                row.n_replicates.to_string(),
            ])?;
        }
        summary.flush()?;

        let mut replicates = csv::Writer::from_path(dir.join("replicates.csv"))?;
        replicates.write_record([
            "replicate",
            "arm",
            "status",
            "att",
            "n_pairs",
            "unmatched_treated",
            "n_scored",
            "inconsistency",
            "masmd",
            "mjd",
            "pre_match_masmd",
            "resample_hash",
        ])?;
        for rec in &self.replicates {
            for arm in &rec.arms {
                match &arm.outcome {
                    ArmOutcome::Ok {
                        att,
                        n_pairs,
                        unmatched_treated,
                        n_scored,
                        inconsistency,
                        masmd,
                        mjd,
                    } => replicates.write_record([
                        rec.replicate.to_string(),
                        arm.arm.to_string(),
                        "ok".to_string(),
                        format!("{att}"),
                        n_pairs.to_string(),
                        unmatched_treated.to_string(),
                        n_scored.to_string(),
                        format!("{inconsistency}"),
                        format!("{masmd}"),
                        format!("{mjd}"),
                        format!("{}", rec.pre_match_masmd),
                        rec.resample_hash.to_string(),
                    ])?,
                    ArmOutcome::Failed { reason } => replicates.write_record([
                        rec.replicate.to_string(),
                        arm.arm.to_string(),
                        format!("failed: {reason}"),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        format!("{}", rec.pre_match_masmd),
                        rec.resample_hash.to_string(),
                    ])?,
                }
            }
        }
        replicates.flush()?;

        std::fs::write(dir.join("config.json"), self.config.to_json()?)?;
        std::fs::write(
            dir.join("provenance.json"),
            serde_json::to_string_pretty(&self.provenance)?,
        )?;
        Ok(())
    }

    /// Read a previously emitted summary back.
    pub fn load_summary(dir: &Path) -> Result<SummaryTable> {
        let mut reader = csv::Reader::from_path(dir.join("summary.csv"))?;
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            rows.push(SummaryRow {
                arm: record[0].parse()?,
                metric: record[1].to_string(),
                value: parse_opt(&record[2])?,
                se: parse_opt(&record[3])?,
                n_replicates: record[4]
                    .parse()
                    .map_err(|_| Error::Config("bad n_replicates".into()))?,
            });
        }
        Ok(SummaryTable { rows })
    }

    pub fn load_provenance(dir: &Path) -> Result<Provenance> {
        let text = std::fs::read_to_string(dir.join("provenance.json"))?;
        Ok(serde_json::from_str(&text)?)
    }
}
