//! Experiment configuration: data source, partitioning, reducer choice,
//! bootstrap settings, and output control.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::causal::LogisticSettings;
use crate::collaboration::TargetScaling;
use crate::error::{Error, Result};
use crate::tabular::{PartitionSpec, SyntheticConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Synthetic(SyntheticConfig),
    Csv { path: PathBuf, schema: PathBuf },
}

/// Which reduction each party applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReducerMethod {
    #[serde(rename = "pca")]
    Pca,
    #[serde(rename = "lpp")]
    Lpp,
    #[serde(rename = "ae")]
    Autoencoder,
    #[serde(rename = "bs")]
    Bootstrap,
    #[serde(rename = "pca+bs")]
    PcaBootstrap,
    #[serde(rename = "lpp+bs")]
    LppBootstrap,
    #[serde(rename = "ae+bs")]
    AutoencoderBootstrap,
    /// One invertible linear map shared by every party. Diagnostic
    /// method: with full dimension and no ridge, the collaborative
    /// pipeline must reproduce the centralized one exactly.
    #[serde(rename = "shared_linear")]
    SharedLinear,
}

impl ReducerMethod {
    pub fn uses_bootstrap(self) -> bool {
        matches!(
            self,
            ReducerMethod::Bootstrap
                | ReducerMethod::PcaBootstrap
                | ReducerMethod::LppBootstrap
                | ReducerMethod::AutoencoderBootstrap
        )
    }

    pub fn uses_base(self) -> bool {
        !matches!(self, ReducerMethod::Bootstrap)
    }
}

fn default_sampling_ratio() -> f64 {
    0.5
}
fn default_lpp_neighbors() -> usize {
    5
}
fn default_ae_epochs() -> usize {
    500
}
fn default_ae_learning_rate() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducerSpec {
    pub method: ReducerMethod,
    /// (base dims, bootstrap dims); when absent, the collaborative
    /// dimension is split per the method: all-base, all-bootstrap, or
    /// half and half.
    #[serde(default)]
    pub dims: Option<(usize, usize)>,
    #[serde(default = "default_sampling_ratio")]
    pub sampling_ratio: f64,
    #[serde(default = "default_lpp_neighbors")]
    pub lpp_neighbors: usize,
    #[serde(default)]
    pub lpp_heat: Option<f64>,
    #[serde(default = "default_ae_epochs")]
    pub ae_epochs: usize,
    #[serde(default = "default_ae_learning_rate")]
    pub ae_learning_rate: f64,
}

impl ReducerSpec {
    pub fn pca() -> Self {
        ReducerSpec {
            method: ReducerMethod::Pca,
            dims: None,
            sampling_ratio: default_sampling_ratio(),
            lpp_neighbors: default_lpp_neighbors(),
            lpp_heat: None,
            ae_epochs: default_ae_epochs(),
            ae_learning_rate: default_ae_learning_rate(),
        }
    }

    pub fn with_method(method: ReducerMethod) -> Self {
        ReducerSpec {
            method,
            ..ReducerSpec::pca()
        }
    }

    /// Resolve (base, bootstrap) dimensions against the collaborative
    /// dimension, enforcing the three canonical splits unless
    /// `free_dims` lifts the restriction.
    pub fn resolve_dims(&self, collab_dim: usize, free_dims: bool) -> Result<(usize, usize)> {
        let canonical = match self.method {
            ReducerMethod::Bootstrap => (0, collab_dim),
            ReducerMethod::Pca
            | ReducerMethod::Lpp
            | ReducerMethod::Autoencoder
            | ReducerMethod::SharedLinear => (collab_dim, 0),
            ReducerMethod::PcaBootstrap
            | ReducerMethod::LppBootstrap
            | ReducerMethod::AutoencoderBootstrap => (collab_dim - collab_dim / 2, collab_dim / 2),
        };
        let dims = self.dims.unwrap_or(canonical);
        if dims.0 + dims.1 != collab_dim {
            return Err(Error::Config(format!(
                "reducer dims {:?} must sum to the collaborative dimension {collab_dim}",
                dims
            )));
        }
        if !self.method.uses_bootstrap() && dims.1 != 0 {
            return Err(Error::Config(format!(
                "method {:?} does not take bootstrap dimensions, got {:?}",
                self.method, dims
            )));
        }
        if !self.method.uses_base() && dims.0 != 0 {
            return Err(Error::Config(format!(
                "method {:?} is bootstrap-only, got {:?}",
                self.method, dims
            )));
        }
        if !free_dims && dims != canonical {
            return Err(Error::Config(format!(
                "dims {dims:?} are outside the canonical splits {:?}; pass free_dims to allow them",
                canonical
            )));
        }
        Ok(dims)
    }
}

fn default_replicates() -> usize {
    100
}
fn default_caliper() -> f64 {
    0.2
}

/// Full description of one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub partition: PartitionSpec,
    pub reducer: ReducerSpec,
    /// Collaborative dimension; defaults to one less than the covariate
    /// count.
    #[serde(default)]
    pub collab_dim: Option<usize>,
    /// Collaborator counts for the DC arms; defaults to all parties.
    #[serde(default)]
    pub collaborators: Option<Vec<usize>>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_caliper")]
    pub caliper_multiplier: f64,
    #[serde(default)]
    pub logistic: LogisticSettings,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub anchor_target: TargetScaling,
    /// Partition the raw population once and bootstrap within shards,
    /// instead of re-partitioning each replicate's resample.
    #[serde(default)]
    pub partition_once: bool,
    #[serde(default)]
    pub free_dims: bool,
    /// Worker threads for replicate execution; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// A complete runnable default: confounded synthetic clinical data,
    /// five IID parties, PCA reduction.
    pub fn example_defaults() -> Self {
        ExperimentConfig {
            data: DataSource::Synthetic(SyntheticConfig::clinical_confounded(12_000, -2.0, 7)),
            partition: PartitionSpec {
                scheme: crate::tabular::PartitionScheme::Iid { parts: 5 },
                seed: 1,
            },
            reducer: ReducerSpec::pca(),
            collab_dim: None,
            collaborators: None,
            replicates: default_replicates(),
            caliper_multiplier: default_caliper(),
            logistic: LogisticSettings::default(),
            seed: 42,
            anchor_target: TargetScaling::Unit,
            partition_once: false,
            free_dims: false,
            workers: 0,
            out_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.partition.validate()?;
        if let DataSource::Synthetic(cfg) = &self.data {
            cfg.validate()?;
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be >= 1".into()));
        }
        if !(self.caliper_multiplier > 0.0) {
            return Err(Error::Config("caliper multiplier must be positive".into()));
        }
        let parts = self.partition.party_count();
        if let Some(counts) = &self.collaborators {
            if counts.is_empty() {
                return Err(Error::Config("collaborator list must not be empty".into()));
            }
            for &c in counts {
                if c == 0 || c > parts {
                    return Err(Error::Config(format!(
                        "collaborator count {c} is outside 1..={parts}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
