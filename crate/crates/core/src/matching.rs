//! Trusted resource matching (block B3) and trust-hypergraph weights (block B4).

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::error::{Error, Result};
use crate::sim::DeviceId;

/// CPU, memory and bandwidth shares, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResourceProfile {
    pub cpu: f64,
    pub mem: f64,
    pub bw: f64,
}

impl ResourceProfile {
    pub fn new(cpu: f64, mem: f64, bw: f64) -> Result<Self> {
        for (name, v) in [("cpu", cpu), ("mem", mem), ("bw", bw)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Input(format!("{name} = {v} outside [0, 1]")));
            }
        }
        Ok(Self { cpu, mem, bw })
    }

    /// Three independent uniforms on `[0, 1]`.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self {
            cpu: rng.gen(),
            mem: rng.gen(),
            bw: rng.gen(),
        }
    }

    fn add(self, other: Self) -> Self {
        Self {
            cpu: self.cpu + other.cpu,
            mem: self.mem + other.mem,
            bw: self.bw + other.bw,
        }
    }

    /// Componentwise `self ≥ other`.
    pub fn dominates(&self, other: &Self) -> bool {
        self.cpu >= other.cpu && self.mem >= other.mem && self.bw >= other.bw
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskRequirement {
    pub task_id: u64,
    pub required: ResourceProfile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRecord {
    pub task_id: u64,
    /// Accepted devices in trust order; at most two.
    pub selected: Vec<DeviceId>,
    pub satisfied: bool,
}

pub fn sample_task<R: Rng + ?Sized>(task_id: u64, rng: &mut R) -> TaskRequirement {
    TaskRequirement {
        task_id,
        required: ResourceProfile::sample(rng),
    }
}

const MAX_COLLABORATORS: usize = 2;

/// Greedy trust-ordered selection of at most two collaborators.
///
/// Devices are scanned by descending trust (ties by ascending id). A device is
/// accepted while the pooled resources of the accepted set still fall short
/// of the requirement in some component; at least one device is always taken.
pub fn select_collaborators(
    task: &TaskRequirement,
    resources: &BTreeMap<DeviceId, ResourceProfile>,
    trust: &BTreeMap<DeviceId, f64>,
) -> Result<SelectionRecord> {
    if resources.len() != trust.len() || resources.keys().any(|k| !trust.contains_key(k)) {
        return Err(Error::Input("resource and trust maps cover different devices".into()));
    }
    if trust.len() < MAX_COLLABORATORS {
        return Err(Error::Input(format!(
            "need at least {MAX_COLLABORATORS} devices, got {}",
            trust.len()
        )));
    }
    let mut order: Vec<(DeviceId, f64)> = trust.iter().map(|(&d, &t)| (d, t)).collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut selected = Vec::with_capacity(MAX_COLLABORATORS);
    let mut pooled = ResourceProfile::default();
    for (device, _) in order {
        if selected.len() == MAX_COLLABORATORS
            || (!selected.is_empty() && pooled.dominates(&task.required))
        {
            break;
        }
        selected.push(device);
        pooled = pooled.add(resources[&device]);
    }
    Ok(SelectionRecord {
        task_id: task.task_id,
        selected,
        satisfied: pooled.dominates(&task.required),
    })
}

/// Unordered pair of distinct devices, stored smallest id first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DevicePair(DeviceId, DeviceId);

impl DevicePair {
    pub fn new(a: DeviceId, b: DeviceId) -> Result<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Ok(Self(a, b)),
            std::cmp::Ordering::Greater => Ok(Self(b, a)),
            std::cmp::Ordering::Equal => Err(Error::Input(format!("self-pair ({a}, {a})"))),
        }
    }

    pub fn members(&self) -> (DeviceId, DeviceId) {
        (self.0, self.1)
    }
}

/// Every unordered pair drawn from `devices`.
pub fn pairs_within(devices: &[DeviceId]) -> Vec<(DeviceId, DeviceId)> {
    let unique: BTreeSet<DeviceId> = devices.iter().copied().collect();
    let unique: Vec<_> = unique.into_iter().collect();
    let mut pairs = Vec::new();
    for (i, &a) in unique.iter().enumerate() {
        for &b in &unique[i + 1..] {
            pairs.push((a, b));
        }
    }
    pairs
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrustHypergraphState {
    weights: BTreeMap<DevicePair, f64>,
}

impl TrustHypergraphState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn weight(&self, a: DeviceId, b: DeviceId) -> Option<f64> {
        self.weights.get(&DevicePair::new(a, b).ok()?).copied()
    }

    pub fn weights(&self) -> &BTreeMap<DevicePair, f64> {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Sets each listed pair's weight to the average of its members' latest trust.
pub fn update_hypergraph_weights(
    state: &TrustHypergraphState,
    latest_trust: &BTreeMap<DeviceId, f64>,
    pairs: &[(DeviceId, DeviceId)],
) -> Result<TrustHypergraphState> {
    let mut next = state.clone();
    for &(a, b) in pairs {
        let pair = DevicePair::new(a, b)?;
        let score = |d: DeviceId| {
            latest_trust
                .get(&d)
                .copied()
                .ok_or_else(|| Error::Input(format!("no trust score for device {d}")))
        };
        let (ta, tb) = (score(a)?, score(b)?);
        for t in [ta, tb] {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::Input(format!("trust score {t} outside [0, 1]")));
            }
        }
        next.weights.insert(pair, (ta + tb) / 2.0);
    }
    Ok(next)
}
