//! Device population and continuous (block B1) trust evaluation.
//!
//! Each device owns a latent baseline embedding `b_d ~ N(0, I_m)`. At every
//! time step an agent observes `b_d + ε` with `ε ~ N(0, σ² I_m)` and emits the
//! normalised cosine `τ = ½(1 + cos(b_d, b_d + ε))`.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::rng;

pub type DeviceId = u64;

/// Parameters shared by every simulated block.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub device_count: usize,
    /// Number of time steps, `T + 1`.
    pub time_steps: usize,
    pub embedding_dim: usize,
    pub noise_std: f64,
    pub trust_prob: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            device_count: 20,
            time_steps: 10,
            embedding_dim: 128,
            noise_std: 0.1,
            trust_prob: 0.7,
            seed: DEFAULT_SEED,
        }
    }
}

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 9;

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.device_count < 1 {
            return Err(Error::Config("device_count must be at least 1".into()));
        }
        if self.time_steps < 2 {
            return Err(Error::Config("time_steps must be at least 2".into()));
        }
        if self.embedding_dim < 1 {
            return Err(Error::Config("embedding_dim must be at least 1".into()));
        }
        if !(self.noise_std > 0.0 && self.noise_std.is_finite()) {
            return Err(Error::Config(format!(
                "noise_std must be positive, got {}",
                self.noise_std
            )));
        }
        if !(0.0..=1.0).contains(&self.trust_prob) {
            return Err(Error::Config(format!(
                "trust_prob must lie in [0, 1], got {}",
                self.trust_prob
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceRecord {
    pub device_id: DeviceId,
    /// `true` when the device is trustworthy.
    pub label: bool,
    pub baseline: Vec<f64>,
}

impl DeviceRecord {
    pub fn baseline_norm(&self) -> f64 {
        norm(&self.baseline)
    }
}

/// Trust scores of one agent, one gap-free series per device.
#[derive(Debug, Clone, PartialEq)]
pub struct TrustLog {
    agent_id: String,
    series: BTreeMap<DeviceId, Vec<f64>>,
}

impl TrustLog {
    /// Builds a log, checking that every series has the same length and every
    /// score lies in `[0, 1]`.
    pub fn from_series(
        agent_id: impl Into<String>,
        series: BTreeMap<DeviceId, Vec<f64>>,
    ) -> Result<Self> {
        let mut len = None;
        for (&device, scores) in &series {
            match len {
                None => len = Some(scores.len()),
                Some(l) if l != scores.len() => {
                    return Err(Error::Data(format!(
                        "device {device} has {} time steps, expected {l}",
                        scores.len()
                    )))
                }
                _ => {}
            }
            if let Some((t, s)) = scores
                .iter()
                .enumerate()
                .find(|(_, s)| !(0.0..=1.0).contains(*s))
            {
                return Err(Error::Data(format!(
                    "device {device} time step {t}: score {s} outside [0, 1]"
                )));
            }
        }
        Ok(Self {
            agent_id: agent_id.into(),
            series,
        })
    }

    pub fn agent_id(&self) -> &str {
        &self.agent_id
    }

    pub fn series(&self) -> &BTreeMap<DeviceId, Vec<f64>> {
        &self.series
    }

    pub fn into_series(self) -> BTreeMap<DeviceId, Vec<f64>> {
        self.series
    }

    pub fn score(&self, device: DeviceId, time_step: usize) -> Option<f64> {
        self.series.get(&device)?.get(time_step).copied()
    }

    /// Most recent score of each device.
    pub fn latest(&self) -> BTreeMap<DeviceId, f64> {
        self.series
            .iter()
            .filter_map(|(&d, s)| s.last().map(|&v| (d, v)))
            .collect()
    }

    /// Number of time steps per device (0 for an empty log).
    pub fn time_steps(&self) -> usize {
        self.series.values().next().map_or(0, Vec::len)
    }

    pub fn device_count(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    /// Rows in `(time_step, device_id, score)` order.
    pub fn entries(&self) -> Vec<(usize, DeviceId, f64)> {
        let mut rows: Vec<_> = self
            .series
            .iter()
            .flat_map(|(&d, s)| s.iter().enumerate().map(move |(t, &v)| (t, d, v)))
            .collect();
        rows.sort_by_key(|&(t, d, _)| (t, d));
        rows
    }
}

pub fn generate_population(cfg: &SimConfig) -> Result<Vec<DeviceRecord>> {
    cfg.validate()?;
    let mut rng = rng::stream(cfg.seed, "population", 0);
    // labels first, so they do not depend on the embedding dimension
    let labels: Vec<bool> = (0..cfg.device_count)
        .map(|_| rng.gen_bool(cfg.trust_prob))
        .collect();
    let population = labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| DeviceRecord {
            device_id: i as DeviceId,
            label,
            baseline: (0..cfg.embedding_dim)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect(),
        })
        .collect();
    Ok(population)
}

/// Returns `baseline + ε` with `ε` i.i.d. `N(0, noise_std²)`.
pub fn observe_embedding<R: Rng + ?Sized>(baseline: &[f64], noise_std: f64, rng: &mut R) -> Vec<f64> {
    let noise = Normal::new(0.0, noise_std).expect("noise_std must be finite and non-negative");
    baseline.iter().map(|&b| b + noise.sample(rng)).collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine of the angle between two nonzero vectors, clamped to `[-1, 1]`.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Input(format!(
            "vector lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Domain("cosine undefined for a zero-norm vector".into()));
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Normalised cosine similarity `½(1 + cos(trusted, observed))`.
pub fn trust_score(trusted: &[f64], observed: &[f64]) -> Result<f64> {
    Ok(0.5 * (1.0 + cosine(trusted, observed)?))
}

/// Maps a trust score in `[0, 1]` to `2τ − 1 ∈ [−1, 1]`.
pub fn centred_similarity(tau: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Domain(format!("trust score {tau} outside [0, 1]")));
    }
    Ok(2.0 * tau - 1.0)
}

/// Scores every device at every time step from the point of view of one agent.
///
/// Agents share the population's baselines but draw noise from a stream keyed
/// by `(seed, agent_id, device_id)`.
pub fn run_continuous_evaluation(
    cfg: &SimConfig,
    population: &[DeviceRecord],
    agent_id: &str,
) -> Result<TrustLog> {
    cfg.validate()?;
    let domain = format!("b1:{agent_id}");
    let mut series = BTreeMap::new();
    for device in population {
        let mut rng = rng::stream(cfg.seed, &domain, device.device_id);
        let scores = (0..cfg.time_steps)
            .map(|_| {
                let observed = observe_embedding(&device.baseline, cfg.noise_std, &mut rng);
                trust_score(&device.baseline, &observed)
            })
            .collect::<Result<Vec<_>>>()?;
        series.insert(device.device_id, scores);
    }
    TrustLog::from_series(agent_id, series)
}
