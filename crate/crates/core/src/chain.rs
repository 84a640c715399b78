//! Staged (block B2) chain-of-trust evaluation with pruning.
//!
//! At stage `k` (1-based) every surviving device is re-scored on the first
//! `stage_dims` baseline coordinates with noise variance `σ²(k + 1)`. The
//! stage score is mixed with the device's latest continuous score and devices
//! whose combined score falls below `θ_k = 0.5 + 0.1k` are pruned.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;
use crate::sim::{observe_embedding, trust_score, DeviceId, DeviceRecord, SimConfig, TrustLog};

/// Threshold used when turning combined scores into trust decisions.
pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct StageConfig {
    /// Number of pruning stages `K`.
    pub stage_count: usize,
    /// Weight `α` of the continuous score in the convex combination.
    pub mix_weight: f64,
    /// Leading baseline coordinates used by every stage.
    pub stage_dims: usize,
    /// Rows emitted by [`overhead_accuracy_table`].
    pub table_stages: usize,
}

impl Default for StageConfig {
    fn default() -> Self {
        Self {
            stage_count: 3,
            mix_weight: 0.5,
            stage_dims: 64,
            table_stages: 5,
        }
    }
}

impl StageConfig {
    /// Defaults with `stage_dims` set to half the embedding dimension.
    pub fn for_sim(cfg: &SimConfig) -> Self {
        Self {
            stage_dims: (cfg.embedding_dim / 2).max(1),
            ..Self::default()
        }
    }

    /// Pruning threshold of stage `k` (1-based).
    pub fn threshold(k: usize) -> f64 {
        0.5 + 0.1 * k as f64
    }

    pub fn validate(&self, cfg: &SimConfig) -> Result<()> {
        if self.stage_count < 1 {
            return Err(Error::Config("stage_count must be at least 1".into()));
        }
        if self.table_stages < 1 {
            return Err(Error::Config("table_stages must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.mix_weight) {
            return Err(Error::Config(format!(
                "mix_weight must lie in [0, 1], got {}",
                self.mix_weight
            )));
        }
        if self.stage_dims < 1 || self.stage_dims > cfg.embedding_dim {
            return Err(Error::Config(format!(
                "stage_dims {} must lie in 1..={}",
                self.stage_dims, cfg.embedding_dim
            )));
        }
        let last = Self::threshold(self.stage_count);
        if !(last > 0.0 && last < 1.0) {
            return Err(Error::Config(format!(
                "stage_count {} gives threshold {last}, outside (0, 1)",
                self.stage_count
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageOutcome {
    pub stage_index: usize,
    /// Devices that passed this stage.
    pub surviving: BTreeSet<DeviceId>,
    /// Raw stage trust of every device evaluated at this stage.
    pub stage_scores: BTreeMap<DeviceId, f64>,
    /// Stage trust mixed with the continuous score.
    pub combined_scores: BTreeMap<DeviceId, f64>,
    pub cumulative_overhead: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverheadRow {
    pub stage: usize,
    pub eval_overhead: u64,
    pub accuracy: f64,
}

/// Cosine trust on the first `stage_dims` coordinates with noise standard
/// deviation `noise_std·√(k + 1)`.
pub fn stage_trust<R: Rng + ?Sized>(
    device: &DeviceRecord,
    k: usize,
    stage_dims: usize,
    noise_std: f64,
    rng: &mut R,
) -> Result<f64> {
    if k < 1 {
        return Err(Error::Input("stage index is 1-based".into()));
    }
    if stage_dims > device.baseline.len() {
        return Err(Error::Config(format!(
            "stage_dims {stage_dims} exceeds baseline length {}",
            device.baseline.len()
        )));
    }
    let sub = &device.baseline[..stage_dims];
    let observed = observe_embedding(sub, noise_std * ((k + 1) as f64).sqrt(), rng);
    trust_score(sub, &observed)
}

/// Convex combination `α·continuous + (1 − α)·staged`.
pub fn combine_trust(continuous: f64, staged: f64, alpha: f64) -> Result<f64> {
    for (name, v) in [("continuous", continuous), ("staged", staged), ("alpha", alpha)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain(format!("{name} = {v} outside [0, 1]")));
        }
    }
    let mixed = alpha * continuous + (1.0 - alpha) * staged;
    Ok(mixed.clamp(continuous.min(staged), continuous.max(staged)))
}

/// Runs the `K` pruning stages.
pub fn run_chain_of_trust(
    cfg: &SimConfig,
    stage_cfg: &StageConfig,
    population: &[DeviceRecord],
    trust_log: &TrustLog,
) -> Result<Vec<StageOutcome>> {
    stage_cfg.validate(cfg)?;
    let thresholds: Vec<f64> = (1..=stage_cfg.stage_count)
        .map(StageConfig::threshold)
        .collect();
    run_chain_with_thresholds(cfg, stage_cfg, population, trust_log, &thresholds)
}

/// Runs one stage per entry of `thresholds`, pruning devices whose combined
/// score is below that stage's threshold.
pub fn run_chain_with_thresholds(
    cfg: &SimConfig,
    stage_cfg: &StageConfig,
    population: &[DeviceRecord],
    trust_log: &TrustLog,
    thresholds: &[f64],
) -> Result<Vec<StageOutcome>> {
    let latest = trust_log.latest();
    let mut surviving: BTreeSet<DeviceId> = population.iter().map(|d| d.device_id).collect();
    if let Some(missing) = surviving.iter().find(|d| !latest.contains_key(d)) {
        return Err(Error::Data(format!("trust log has no scores for device {missing}")));
    }
    let by_id: BTreeMap<DeviceId, &DeviceRecord> =
        population.iter().map(|d| (d.device_id, d)).collect();

    let mut overhead = 0u64;
    let mut outcomes = Vec::with_capacity(thresholds.len());
    for (i, &theta) in thresholds.iter().enumerate() {
        let k = i + 1;
        let domain = format!("b2:stage{k}");
        let mut stage_scores = BTreeMap::new();
        let mut combined_scores = BTreeMap::new();
        for &id in &surviving {
            let mut rng = rng::stream(cfg.seed, &domain, id);
            let staged = stage_trust(by_id[&id], k, stage_cfg.stage_dims, cfg.noise_std, &mut rng)?;
            stage_scores.insert(id, staged);
            combined_scores.insert(id, combine_trust(latest[&id], staged, stage_cfg.mix_weight)?);
        }
        overhead += surviving.len() as u64;
        surviving = combined_scores
            .iter()
            .filter(|&(_, &s)| s >= theta)
            .map(|(&id, _)| id)
            .collect();
        outcomes.push(StageOutcome {
            stage_index: k,
            surviving: surviving.clone(),
            stage_scores,
            combined_scores,
            cumulative_overhead: overhead,
        });
    }
    Ok(outcomes)
}

/// Fraction of devices whose decision `score ≥ threshold` matches the label.
pub fn classification_accuracy(
    scores: &BTreeMap<DeviceId, f64>,
    labels: &BTreeMap<DeviceId, bool>,
    threshold: f64,
) -> Result<f64> {
    if scores.len() != labels.len() || scores.keys().any(|k| !labels.contains_key(k)) {
        return Err(Error::Data("score and label maps cover different devices".into()));
    }
    if scores.is_empty() {
        return Err(Error::Data("no devices to classify".into()));
    }
    let correct = scores
        .iter()
        .filter(|&(id, &s)| (s >= threshold) == labels[id])
        .count();
    Ok(correct as f64 / scores.len() as f64)
}

/// One `(stage, cumulative overhead, accuracy)` row per stage up to
/// `table_stages`.
///
/// Pruning thresholds apply to the first `stage_count` stages only; later
/// stages keep evaluating the survivors. Accuracy is taken over the whole
/// population, a device pruned before a stage counting as untrustworthy.
pub fn overhead_accuracy_table(
    cfg: &SimConfig,
    stage_cfg: &StageConfig,
    population: &[DeviceRecord],
    trust_log: &TrustLog,
) -> Result<Vec<OverheadRow>> {
    stage_cfg.validate(cfg)?;
    let thresholds: Vec<f64> = (1..=stage_cfg.table_stages)
        .map(|k| {
            if k <= stage_cfg.stage_count {
                StageConfig::threshold(k)
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let outcomes = run_chain_with_thresholds(cfg, stage_cfg, population, trust_log, &thresholds)?;
    let labels: BTreeMap<DeviceId, bool> =
        population.iter().map(|d| (d.device_id, d.label)).collect();
    outcomes
        .iter()
        .map(|o| {
            let scores = labels
                .keys()
                .map(|id| (*id, o.combined_scores.get(id).copied().unwrap_or(0.0)))
                .collect();
            Ok(OverheadRow {
                stage: o.stage_index,
                eval_overhead: o.cumulative_overhead,
                accuracy: classification_accuracy(&scores, &labels, DECISION_THRESHOLD)?,
            })
        })
        .collect()
}
