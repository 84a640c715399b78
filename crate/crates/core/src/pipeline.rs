//! End-to-end wiring of the simulated blocks, shared by the benchmark and the
//! command-line tool.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::graphs::{self, CouplingGraph};
use crate::ingest::{align_agents, AlignedSeriesMap};
use crate::matching::{
    pairs_within, sample_task, select_collaborators, update_hypergraph_weights, ResourceProfile,
    SelectionRecord, TaskRequirement, TrustHypergraphState,
};
use crate::recon::{obfuscate_scores, reconstruct_embedding, EmbeddingMatrix};
use crate::rng;
use crate::sim::{generate_population, run_continuous_evaluation, DeviceId, DeviceRecord, SimConfig, TrustLog};

pub const AGENT_A: &str = "agent1";
pub const AGENT_B: &str = "agent2";

#[derive(Debug, Clone)]
pub struct Simulation {
    pub population: Vec<DeviceRecord>,
    pub agent_a: TrustLog,
    pub agent_b: TrustLog,
}

/// Population plus both agents' continuous trust logs.
pub fn simulate(cfg: &SimConfig) -> Result<Simulation> {
    let population = generate_population(cfg)?;
    let agent_a = run_continuous_evaluation(cfg, &population, AGENT_A)?;
    let agent_b = run_continuous_evaluation(cfg, &population, AGENT_B)?;
    Ok(Simulation {
        population,
        agent_a,
        agent_b,
    })
}

pub fn reconstruct_aligned(aligned: &AlignedSeriesMap) -> Result<EmbeddingMatrix> {
    aligned
        .iter()
        .map(|(d, a, b)| Ok((d, reconstruct_embedding(d, a, b)?)))
        .collect()
}

/// Simulates both agents, aligns them and reconstructs every embedding.
pub fn simulate_embeddings(cfg: &SimConfig) -> Result<EmbeddingMatrix> {
    let sim = simulate(cfg)?;
    let alignment = align_agents(sim.agent_a.series(), sim.agent_b.series())?;
    reconstruct_aligned(&alignment.aligned)
}

pub fn device_resources(cfg: &SimConfig, population: &[DeviceRecord]) -> BTreeMap<DeviceId, ResourceProfile> {
    population
        .iter()
        .map(|d| {
            let mut rng = rng::stream(cfg.seed, "b3:resources", d.device_id);
            (d.device_id, ResourceProfile::sample(&mut rng))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct MatchingRun {
    pub tasks: Vec<TaskRequirement>,
    pub selections: Vec<SelectionRecord>,
    /// Pair weights after every task's selected pair was updated.
    pub hypergraph: TrustHypergraphState,
    /// Latest trust score per device used for ranking.
    pub trust: BTreeMap<DeviceId, f64>,
}

/// Samples `tasks` requirements, selects collaborators by latest trust and
/// refreshes the hypergraph weight of every selected pair.
pub fn run_matching(
    cfg: &SimConfig,
    population: &[DeviceRecord],
    log: &TrustLog,
    tasks: usize,
) -> Result<MatchingRun> {
    let resources = device_resources(cfg, population);
    let trust = log.latest();
    let mut hypergraph = TrustHypergraphState::new();
    let mut requirements = Vec::with_capacity(tasks);
    let mut selections = Vec::with_capacity(tasks);
    for task_id in 0..tasks as u64 {
        let task = sample_task(task_id, &mut rng::stream(cfg.seed, "b3:task", task_id));
        let selection = select_collaborators(&task, &resources, &trust)?;
        hypergraph = update_hypergraph_weights(&hypergraph, &trust, &pairs_within(&selection.selected))?;
        requirements.push(task);
        selections.push(selection);
    }
    Ok(MatchingRun {
        tasks: requirements,
        selections,
        hypergraph,
        trust,
    })
}

/// Applies [`obfuscate_scores`] to every device series, each device drawing
/// from its own stream.
pub fn obfuscate_log(log: &TrustLog, noise_std: f64, step: f64, seed: u64) -> Result<TrustLog> {
    let domain = format!("obfuscate:{}", log.agent_id());
    let series = log
        .series()
        .iter()
        .map(|(&d, s)| {
            let mut rng = rng::stream(seed, &domain, d);
            Ok((d, obfuscate_scores(s, noise_std, step, &mut rng)?))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    TrustLog::from_series(log.agent_id(), series)
}

/// `G`, `H`, `L` and `H ∪ L`, named as they appear in exported files.
pub fn coupling_graphs(time_steps: usize, stages: usize) -> Result<Vec<(String, CouplingGraph)>> {
    let g = graphs::build_time_graph(time_steps)?;
    let h = graphs::build_stage_graph(stages)?;
    let l = graphs::build_cross_layer_graph(stages)?;
    let hl = graphs::graph_union(&h, &l);
    Ok(vec![
        ("G".to_string(), g),
        ("H".to_string(), h),
        ("L".to_string(), l),
        ("H+L".to_string(), hl),
    ])
}
