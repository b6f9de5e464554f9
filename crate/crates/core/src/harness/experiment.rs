//! Experiment orchestration: bootstrap replicates, per-arm pipelines,
//! metric aggregation.
//!
//! Within one replicate every arm consumes the same resample. The
//! experiment-level bootstrap here is unrelated to the bootstrap
//! reducer, which resamples inside a single party's shard.

use std::collections::{BTreeMap, HashMap};
use std::hash::{Hash, Hasher};

use ndarray::{Array1, Array2};
use rand::Rng;
use rayon::prelude::*;

use super::config::{DataSource, ExperimentConfig, ReducerMethod, ReducerSpec};
use super::report::{
    ArmOutcome, ArmRecord, ArmTag, ExperimentReport, Provenance, ReplicateRecord, SummaryRow,
    SummaryTable,
};
use crate::causal::{
    caliper_match, estimate_att, fit_logistic, predict_propensity, EffectEstimate,
    LogisticSettings, MatchResult, PropensityScores,
};
use crate::collaboration::{
    build_collaborative_dataset, fit_collaboration_with, generate_anchor, make_intermediate_share,
    pooled_bounds, AnchorData, IntermediateShare, TargetScaling,
};
use crate::error::{Error, Result};
use crate::metrics::{balance_report, inconsistency, mjd, BalanceReport, DistributionReport, DEFAULT_BINS};
use crate::reduction::{
    compose_reducer, fit_autoencoder, fit_bootstrap_reducer, fit_lpp, fit_pca, random_orthogonal,
    BootstrapReducerConfig, LinearReducer, MethodTag, Reducer,
};
use crate::rng::{derive_seed, stream, stream_rng};
use crate::tabular::{
    generate_synthetic, partition, read_population_csv, PartitionScheme, PartitionSpec,
    PartyDataset, Population,
};

/// What one arm analyzes.
pub enum ArmSpec<'a> {
    /// Pooled raw covariates.
    Centralized,
    /// One party's raw shard.
    Individual(&'a PartyDataset),
    /// Prebuilt intermediate shares aligned into a collaborative space.
    Collaboration {
        shares: &'a [IntermediateShare],
        collab_dim: usize,
        target: TargetScaling,
    },
}

/// Full output of one arm in one replicate.
#[derive(Debug, Clone)]
pub struct ArmResult {
    pub arm: ArmTag,
    pub replicate: usize,
    pub att: EffectEstimate,
    pub propensity: PropensityScores,
    pub matches: MatchResult,
    /// Post-matching balance over the raw covariates.
    pub balance: BalanceReport,
    /// Filled against the centralized arm by the replicate driver.
    pub distribution: Option<DistributionReport>,
}

impl ArmResult {
    /// Compare this arm's matched covariate sample against a reference
    /// arm's, storing and returning the per-covariate divergence report.
    pub fn compare_distribution(
        &mut self,
        reference: &ArmResult,
        resample: &Population,
    ) -> Result<&DistributionReport> {
        let own = matched_rows(resample, &self.matches)?;
        let other = matched_rows(resample, &reference.matches)?;
        self.distribution = Some(mjd(&own, &other, DEFAULT_BINS)?);
        Ok(self.distribution.as_ref().expect("just stored"))
    }
}

pub struct ArmSettings<'a> {
    pub logistic: &'a LogisticSettings,
    pub caliper_multiplier: f64,
}

fn propensity_inputs<'a>(
    resample: &'a Population,
    spec: &'a ArmSpec,
) -> Result<(Array2<f64>, Vec<bool>, Array1<f64>, Vec<u64>)> {
    match spec {
        ArmSpec::Centralized => Ok((
            resample.covariates().clone(),
            resample.treatment().to_vec(),
            resample.outcome().clone(),
            resample.ids().to_vec(),
        )),
        ArmSpec::Individual(party) => Ok((
            party.population.covariates().clone(),
            party.population.treatment().to_vec(),
            party.population.outcome().clone(),
            party.population.ids().to_vec(),
        )),
        ArmSpec::Collaboration {
            shares,
            collab_dim,
            target,
        } => {
            let maps = fit_collaboration_with(shares, *collab_dim, *target)?;
            let dataset = build_collaborative_dataset(shares, &maps)?;
            Ok((
                dataset.features().clone(),
                dataset.treatment().to_vec(),
                dataset.outcome().clone(),
                dataset.ids().to_vec(),
            ))
        }
    }
}

/// Run one arm: propensity model, caliper matching, effect estimate,
/// and post-matching balance on the raw covariates of the resample.
pub fn run_arm(
    resample: &Population,
    arm: ArmTag,
    replicate: usize,
    spec: &ArmSpec,
    anchor: &AnchorData,
    settings: &ArmSettings,
) -> Result<ArmResult> {
    if let ArmSpec::Collaboration { shares, .. } = spec {
        for share in *shares {
            if share.anchor_rows() != anchor.rows() {
                return Err(Error::DimensionMismatch(format!(
                    "share from party {} carries {} anchor rows, replicate anchor has {}",
                    share.party_id,
                    share.anchor_rows(),
                    anchor.rows()
                )));
            }
        }
    }
    let (features, treatment, outcome, ids) = propensity_inputs(resample, spec)?;
    let model = fit_logistic(&features, &treatment, settings.logistic)?;
    let propensity = predict_propensity(&model, &features, &ids)?;

    let z_by_id: BTreeMap<u64, bool> = ids.iter().copied().zip(treatment.iter().copied()).collect();
    let matches = caliper_match(&propensity, &z_by_id, settings.caliper_multiplier)?;
    let y_by_id: BTreeMap<u64, f64> = ids.iter().copied().zip(outcome.iter().copied()).collect();
    let mut att = estimate_att(&matches, &y_by_id)?;
    att.arm_tag = Some(arm.to_string());

    let index = id_index(resample);
    let treated_rows = rows_for_ids(resample, &index, matches.pairs.iter().map(|&(t, _)| t))?;
    let control_rows = rows_for_ids(resample, &index, matches.pairs.iter().map(|&(_, c)| c))?;
    let balance = balance_report(&treated_rows, &control_rows, resample.schema())?;

    Ok(ArmResult {
        arm,
        replicate,
        att,
        propensity,
        matches,
        balance,
        distribution: None,
    })
}

fn id_index(pop: &Population) -> HashMap<u64, usize> {
    pop.ids().iter().enumerate().map(|(i, &id)| (id, i)).collect()
}

fn rows_for_ids(
    pop: &Population,
    index: &HashMap<u64, usize>,
    ids: impl Iterator<Item = u64>,
) -> Result<Array2<f64>> {
    let rows: Vec<usize> = ids
        .map(|id| {
            index
                .get(&id)
                .copied()
                .ok_or_else(|| Error::Domain(format!("id {id} is not in the resample")))
        })
        .collect::<Result<_>>()?;
    Ok(pop.covariates().select(ndarray::Axis(0), &rows))
}

/// Matched-sample covariate rows (treated then controls, pair order).
fn matched_rows(resample: &Population, matches: &MatchResult) -> Result<Array2<f64>> {
    let index = id_index(resample);
    let all = matches
        .pairs
        .iter()
        .map(|&(t, _)| t)
        .chain(matches.pairs.iter().map(|&(_, c)| c));
    rows_for_ids(resample, &index, all)
}

/// Fit one party's reducer per the experiment spec.
fn fit_party_reducer(
    party: &PartyDataset,
    spec: &ReducerSpec,
    dims: (usize, usize),
    seed: u64,
) -> Result<Reducer> {
    let x = party.population.covariates();
    let z = party.population.treatment();
    let (base_dim, bs_dim) = dims;

    let base: Option<Reducer> = match spec.method {
        ReducerMethod::Pca | ReducerMethod::PcaBootstrap => {
            Some(Reducer::Linear(fit_pca(x, base_dim)?))
        }
        ReducerMethod::Lpp | ReducerMethod::LppBootstrap => Some(Reducer::Linear(fit_lpp(
            x,
            base_dim,
            spec.lpp_neighbors,
            spec.lpp_heat,
        )?)),
        ReducerMethod::Autoencoder | ReducerMethod::AutoencoderBootstrap => {
            Some(Reducer::Nonlinear(fit_autoencoder(
                x,
                base_dim,
                spec.ae_epochs,
                spec.ae_learning_rate,
                derive_seed(seed, &[0xae]),
            )?))
        }
        ReducerMethod::SharedLinear => {
            // The seed must not depend on the party, so all parties draw
            // the same invertible map; the caller arranges that.
            let projection = random_orthogonal(base_dim, derive_seed(seed, &[0x51]));
            Some(Reducer::Linear(LinearReducer::new(
                projection,
                Array1::zeros(x.ncols()),
                MethodTag::Custom,
            )?))
        }
        ReducerMethod::Bootstrap => None,
    };

    let bootstrap: Option<LinearReducer> = if bs_dim > 0 {
        let cfg = BootstrapReducerConfig {
            output_dim: bs_dim,
            sampling_ratio: spec.sampling_ratio,
            seed: derive_seed(seed, &[0x62]),
            logistic: LogisticSettings::default(),
            max_retries: 50,
        };
        Some(fit_bootstrap_reducer(x, z, &cfg)?)
    } else {
        None
    };

    match (base, bootstrap) {
        (Some(b), None) => Ok(b),
        (None, Some(bs)) => Ok(Reducer::Linear(bs)),
        (Some(b), Some(bs)) => compose_reducer(b, bs, derive_seed(seed, &[0x45])),
        (None, None) => Err(Error::Config("reducer resolves to no dimensions".into())),
    }
}

/// Fit a reducer per the spec outside any replicate. Backs the explicit
/// reducer-export debugging path; nothing else externalizes a reducer.
pub fn fit_reducer_for_export(
    party: &PartyDataset,
    spec: &ReducerSpec,
    dims: (usize, usize),
    seed: u64,
) -> Result<Reducer> {
    fit_party_reducer(party, spec, dims, derive_seed(seed, &[stream::REDUCER]))
}

fn hash_rows(rows: &[usize]) -> u64 {
    let mut hasher = std::collections::hash_map::DefaultHasher::new();
    rows.hash(&mut hasher);
    hasher.finish()
}

struct ReplicateEnv<'a> {
    population: &'a Population,
    fixed_parties: Option<&'a [PartyDataset]>,
    cfg: &'a ExperimentConfig,
    collab_dim: usize,
    dims: (usize, usize),
    collaborators: &'a [usize],
    arm_list: &'a [ArmTag],
}

/// Draw the replicate's resample and its party shards.
fn draw_resample(env: &ReplicateEnv, b: usize) -> (Population, Result<Vec<PartyDataset>>, u64) {
    let master = env.cfg.seed;
    let mut rng = stream_rng(master, &[stream::RESAMPLE, b as u64]);
    match env.fixed_parties {
        None => {
            let n = env.population.n();
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let hash = hash_rows(&rows);
            let resample = env.population.reindexed_rows(&rows);
            let spec = PartitionSpec {
                scheme: env.cfg.partition.scheme.clone(),
                seed: derive_seed(master, &[stream::PARTITION, b as u64, env.cfg.partition.seed]),
            };
            let parties = partition(&resample, &spec);
            (resample, parties, hash)
        }
        Some(fixed) => {
            // Bootstrap within each fixed shard; the pooled resample is
            // the concatenation, reindexed.
            let index = id_index(env.population);
            let mut all_rows = Vec::with_capacity(env.population.n());
            let mut spans = Vec::with_capacity(fixed.len());
            for party in fixed {
                let shard_rows: Vec<usize> = party
                    .population
                    .ids()
                    .iter()
                    .map(|id| index[id])
                    .collect();
                let start = all_rows.len();
                for _ in 0..shard_rows.len() {
                    all_rows.push(shard_rows[rng.random_range(0..shard_rows.len())]);
                }
                spans.push((party.party_id, start..all_rows.len()));
            }
            let hash = hash_rows(&all_rows);
            let resample = env.population.reindexed_rows(&all_rows);
            let parties = spans
                .into_iter()
                .map(|(party_id, span)| PartyDataset {
                    party_id,
                    population: resample.select_rows(&span.collect::<Vec<_>>()),
                })
                .collect();
            (resample, Ok(parties), hash)
        }
    }
}

fn run_replicate(env: &ReplicateEnv, b: usize) -> ReplicateRecord {
    let master = env.cfg.seed;
    let (resample, parties, resample_hash) = draw_resample(env, b);

    let pre_match_masmd = pre_match_imbalance(&resample).unwrap_or(f64::NAN);

    let fail_all = |reason: String| ReplicateRecord {
        replicate: b,
        resample_hash,
        pre_match_masmd,
        arms: env
            .arm_list
            .iter()
            .map(|&arm| ArmRecord {
                arm,
                outcome: ArmOutcome::Failed {
                    reason: reason.clone(),
                },
            })
            .collect(),
    };

    let settings = ArmSettings {
        logistic: &env.cfg.logistic,
        caliper_multiplier: env.cfg.caliper_multiplier,
    };

    // Partition failure still leaves the centralized arm runnable, but
    // the anchor needs party bounds; treat it as a replicate failure for
    // every sharded arm.
    let parties = match parties {
        Ok(p) => p,
        Err(e) => {
            let mut record = fail_all(format!("partition failed: {e}"));
            let anchor = match generate_anchor(&resample.column_bounds(), resample.n(), 0) {
                Ok(a) => a,
                Err(_) => return record,
            };
            if let Ok(result) = run_arm(&resample, ArmTag::Ca, b, &ArmSpec::Centralized, &anchor, &settings) {
                if let Some(slot) = record.arms.iter_mut().find(|a| a.arm == ArmTag::Ca) {
                    slot.outcome = ca_self_outcome(&result);
                }
            }
            return record;
        }
    };

    let anchor_rows: usize = parties.iter().map(|p| p.population.n()).sum();
    let anchor = match pooled_bounds(&parties)
        .and_then(|bounds| generate_anchor(&bounds, anchor_rows, derive_seed(master, &[stream::ANCHOR, b as u64])))
    {
        Ok(a) => a,
        Err(e) => return fail_all(format!("anchor generation failed: {e}")),
    };

    // Centralized reference arm.
    let ca = run_arm(&resample, ArmTag::Ca, b, &ArmSpec::Centralized, &anchor, &settings);
    let ca = match ca {
        Ok(result) => result,
        Err(e) => {
            let mut record = fail_all("reference arm failed; comparisons unavailable".to_string());
            if let Some(slot) = record.arms.iter_mut().find(|a| a.arm == ArmTag::Ca) {
                slot.outcome = ArmOutcome::Failed {
                    reason: e.to_string(),
                };
            }
            return record;
        }
    };

    let mut outcomes: BTreeMap<ArmTag, ArmOutcome> = BTreeMap::new();
    outcomes.insert(ArmTag::Ca, ca_self_outcome(&ca));

    // Single-party arms.
    for party in &parties {
        let tag = ArmTag::Ia(party.party_id + 1);
        let result = run_arm(&resample, tag, b, &ArmSpec::Individual(party), &anchor, &settings);
        outcomes.insert(tag, finish_arm(result, &ca, &resample));
    }

    // Collaboration arms share per-party reducers and shares.
    if !env.collaborators.is_empty() {
        let c_max = *env.collaborators.iter().max().expect("non-empty");
        let mut shares: Vec<Result<IntermediateShare>> = Vec::with_capacity(c_max);
        for party in parties.iter().take(c_max) {
            let reducer_seed = if env.cfg.reducer.method == ReducerMethod::SharedLinear {
                derive_seed(master, &[stream::REDUCER, b as u64])
            } else {
                derive_seed(master, &[stream::REDUCER, b as u64, party.party_id as u64])
            };
            let share = fit_party_reducer(party, &env.cfg.reducer, env.dims, reducer_seed)
                .and_then(|reducer| make_intermediate_share(party, &reducer, &anchor));
            shares.push(share);
        }
        for &c in env.collaborators {
            let tag = ArmTag::Dcqe(c);
            let mut ready = Vec::with_capacity(c);
            let mut failure = None;
            for share in shares.iter().take(c) {
                match share {
                    Ok(s) => ready.push(s.clone()),
                    Err(e) => {
                        failure = Some(format!("reducer/share failed: {e}"));
                        break;
                    }
                }
            }
            let outcome = match failure {
                Some(reason) => ArmOutcome::Failed { reason },
                None => {
                    let spec = ArmSpec::Collaboration {
                        shares: &ready,
                        collab_dim: env.collab_dim,
                        target: env.cfg.anchor_target,
                    };
                    let result = run_arm(&resample, tag, b, &spec, &anchor, &settings);
                    finish_arm(result, &ca, &resample)
                }
            };
            outcomes.insert(tag, outcome);
        }
    }

    ReplicateRecord {
        replicate: b,
        resample_hash,
        pre_match_masmd,
        arms: outcomes
            .into_iter()
            .map(|(arm, outcome)| ArmRecord { arm, outcome })
            .collect(),
    }
}

/// Balance of the full resample before matching.
fn pre_match_imbalance(resample: &Population) -> Result<f64> {
    let treated_rows: Vec<usize> = (0..resample.n()).filter(|&i| resample.treatment()[i]).collect();
    let control_rows: Vec<usize> = (0..resample.n()).filter(|&i| !resample.treatment()[i]).collect();
    if treated_rows.is_empty() || control_rows.is_empty() {
        return Err(Error::Degenerate("resample has a single class".into()));
    }
    let treated = resample.covariates().select(ndarray::Axis(0), &treated_rows);
    let control = resample.covariates().select(ndarray::Axis(0), &control_rows);
    Ok(balance_report(&treated, &control, resample.schema())?.masmd)
}

fn ca_self_outcome(ca: &ArmResult) -> ArmOutcome {
    ArmOutcome::Ok {
        att: ca.att.att,
        n_pairs: ca.att.n_pairs,
        unmatched_treated: ca.matches.unmatched_treated,
        n_scored: ca.propensity.len(),
        inconsistency: 0.0,
        masmd: ca.balance.masmd,
        mjd: 0.0,
    }
}

fn finish_arm(result: Result<ArmResult>, ca: &ArmResult, resample: &Population) -> ArmOutcome {
    let mut result = match result {
        Ok(r) => r,
        Err(e) => {
            return ArmOutcome::Failed {
                reason: e.to_string(),
            }
        }
    };
    let arm_inconsistency = match inconsistency(result.propensity.as_map(), ca.propensity.as_map()) {
        Ok(v) => v,
        Err(e) => {
            return ArmOutcome::Failed {
                reason: format!("inconsistency undefined: {e}"),
            }
        }
    };
    let mjd_value = match result.compare_distribution(ca, resample) {
        Ok(d) => d.mjd,
        Err(e) => {
            return ArmOutcome::Failed {
                reason: format!("distribution comparison failed: {e}"),
            }
        }
    };
    ArmOutcome::Ok {
        att: result.att.att,
        n_pairs: result.att.n_pairs,
        unmatched_treated: result.matches.unmatched_treated,
        n_scored: result.propensity.len(),
        inconsistency: arm_inconsistency,
        masmd: result.balance.masmd,
        mjd: mjd_value,
    }
}

pub const SUMMARY_METRICS: [&str; 5] = ["gap", "inconsistency", "masmd", "mjd", "att"];

/// Aggregate per-replicate records: gap over paired replicates (one
/// number, no standard error), mean and standard error over replicates
/// for the other metrics.
pub fn summarize(replicates: &[ReplicateRecord]) -> SummaryTable {
    let mut arms: Vec<ArmTag> = replicates
        .iter()
        .flat_map(|r| r.arms.iter().map(|a| a.arm))
        .collect();
    arms.sort();
    arms.dedup();

    let find = |rec: &ReplicateRecord, arm: ArmTag| -> Option<ArmOutcome> {
        rec.arms.iter().find(|a| a.arm == arm).map(|a| a.outcome.clone())
    };

    let mut rows = Vec::new();
    for &arm in &arms {
        let mut att_pairs: Vec<(f64, f64)> = Vec::new(); // (arm att, reference att)
        let mut atts = Vec::new();
        let mut inconsistencies = Vec::new();
        let mut masmds = Vec::new();
        let mut mjds = Vec::new();
        for rec in replicates {
            let Some(ArmOutcome::Ok {
                att,
                inconsistency,
                masmd,
                mjd,
                ..
            }) = find(rec, arm)
            else {
                continue;
            };
            atts.push(att);
            inconsistencies.push(inconsistency);
            masmds.push(masmd);
            mjds.push(mjd);
            if let Some(ArmOutcome::Ok { att: ca_att, .. }) = find(rec, ArmTag::Ca) {
                att_pairs.push((att, ca_att));
            }
        }

        let gap_value = if att_pairs.is_empty() {
            None
        } else {
            let sum_sq: f64 = att_pairs.iter().map(|(a, c)| (a - c) * (a - c)).sum();
            Some((sum_sq / att_pairs.len() as f64).sqrt())
        };
        rows.push(SummaryRow {
            arm,
            metric: "gap".into(),
            value: gap_value,
            se: None,
            n_replicates: att_pairs.len(),
        });
        for (metric, values) in [
            ("inconsistency", &inconsistencies),
            ("masmd", &masmds),
            ("mjd", &mjds),
            ("att", &atts),
        ] {
            let (value, se) = mean_se(values);
            rows.push(SummaryRow {
                arm,
                metric: metric.into(),
                value,
                se,
                n_replicates: values.len(),
            });
        }
    }
    SummaryTable { rows }
}

fn mean_se(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (Some(mean), None);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some((var / n).sqrt()))
}

/// Load or generate the configured population.
pub fn load_population(cfg: &ExperimentConfig) -> Result<Population> {
    match &cfg.data {
        DataSource::Synthetic(synth) => generate_synthetic(synth),
        DataSource::Csv { path, schema } => read_population_csv(path, schema),
    }
}

/// Run the full experiment: B bootstrap replicates, each carrying a
/// centralized arm, every single-party arm, and one collaboration arm
/// per configured collaborator count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let population = load_population(cfg)?;
    let m = population.m();
    if m < 2 {
        return Err(Error::Config("experiments need at least two covariates".into()));
    }
    let collab_dim = cfg.collab_dim.unwrap_or(m - 1);
    if collab_dim == 0 || collab_dim > m {
        return Err(Error::Config(format!(
            "collaborative dimension {collab_dim} is outside 1..={m}"
        )));
    }
    if cfg.reducer.method == ReducerMethod::SharedLinear && collab_dim != m {
        return Err(Error::Config(
            "shared_linear is a full-dimension diagnostic; set collab_dim = m".into(),
        ));
    }
    let dims = cfg.reducer.resolve_dims(collab_dim, cfg.free_dims)?;
    let parts = cfg.partition.party_count();
    let mut collaborators = cfg.collaborators.clone().unwrap_or_else(|| vec![parts]);
    collaborators.sort_unstable();
    collaborators.dedup();

    let fixed_parties = if cfg.partition_once {
        Some(partition(&population, &cfg.partition)?)
    } else {
        None
    };

    let mut arm_list = vec![ArmTag::Ca];
    arm_list.extend((1..=parts).map(ArmTag::Ia));
    arm_list.extend(collaborators.iter().map(|&c| ArmTag::Dcqe(c)));

    let env = ReplicateEnv {
        population: &population,
        fixed_parties: fixed_parties.as_deref(),
        cfg,
        collab_dim,
        dims,
        collaborators: &collaborators,
        arm_list: &arm_list,
    };

    let run_all = || -> Vec<ReplicateRecord> {
        (1..=cfg.replicates)
            .into_par_iter()
            .map(|b| run_replicate(&env, b))
            .collect()
    };
    let replicates = if cfg.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
        pool.install(run_all)
    } else {
        run_all()
    };

    let summary = summarize(&replicates);

    let mut exclusions = std::collections::BTreeMap::new();
    for arm in &arm_list {
        let failed = replicates
            .iter()
            .flat_map(|r| r.arms.iter())
            .filter(|a| a.arm == *arm && matches!(a.outcome, ArmOutcome::Failed { .. }))
            .count();
        if failed > 0 {
            exclusions.insert(arm.to_string(), failed);
        }
    }
    let mut deviations = vec![
        "anchor-bounds: pooled per-party min/max (documented statistic leak)".to_string(),
    ];
    if matches!(cfg.partition.scheme, PartitionScheme::Cluster { .. }) {
        deviations.push("cluster-projection: pca2d (umap substituted)".to_string());
    }
    if matches!(cfg.partition.scheme, PartitionScheme::LabelRatio { .. }) {
        deviations.push(
            "label-ratio: treated samples beyond the per-shard quotas stay out of every shard"
                .to_string(),
        );
    }
    if cfg.partition_once {
        deviations.push("partition-once: shards fixed, bootstrap within shards".to_string());
    }

    Ok(ExperimentReport {
        config: cfg.clone(),
        replicates,
        summary,
        provenance: Provenance {
            seed: cfg.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            deviations,
            exclusions,
        },
    })
}
