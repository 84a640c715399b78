use std::fs;
use std::path::Path;

use serde_json::json;
use trust_recon::analysis::{
    agent_mean_comparison, mean_offdiagonal, pairwise_distances, replicate_benchmark, Correlation,
};
use trust_recon::chain::{overhead_accuracy_table, run_chain_of_trust, StageConfig};
use trust_recon::graphs::{laplacian, spectrum};
use trust_recon::ingest::{
    align_agents, export_agent_comparison_csv, export_embeddings_csv, export_graphs_csv,
    export_matrix_csv, export_overhead_csv, export_replicates_csv, export_selections_csv,
    export_spectrum_csv, export_trust_csv, parse_trust_csv, MissingFrom, SELECTIONS_HEADER,
};
use trust_recon::pipeline::{self, obfuscate_log};
use trust_recon::recon::reconstruction_map;
use trust_recon::sim::DeviceId;
use trust_recon::Error;

use crate::output::{CliError, RunManifest};
use crate::{BenchArgs, GraphsArgs, PopulationArgs, ReconstructArgs, SimulateArgs};

fn echo_population(m: &mut RunManifest, p: &PopulationArgs) {
    m.config("devices", p.devices)
        .config("time_steps", p.time_steps)
        .config("dim", p.dim)
        .config("sigma", p.sigma)
        .config("p_trust", p.p_trust)
        .config("seed", p.seed);
}

pub fn simulate(args: &SimulateArgs) -> Result<String, CliError> {
    let mut manifest = RunManifest::new("simulate");
    let cfg = args.population.sim_config();
    cfg.validate()?;
    let stage_cfg = StageConfig {
        stage_count: args.stages,
        mix_weight: args.alpha,
        table_stages: args.table_stages,
        ..StageConfig::for_sim(&cfg)
    };
    stage_cfg.validate(&cfg)?;
    if !(args.obfuscate_noise >= 0.0 && args.obfuscate_noise.is_finite()) {
        return Err(CliError::Usage("--obfuscate-noise must be a non-negative number".into()));
    }
    if !(args.obfuscate_step >= 0.0 && args.obfuscate_step.is_finite()) {
        return Err(CliError::Usage("--obfuscate-step must be a non-negative number".into()));
    }
    echo_population(&mut manifest, &args.population);
    manifest
        .config("stages", args.stages)
        .config("table_stages", args.table_stages)
        .config("alpha", args.alpha)
        .config("tasks", args.tasks)
        .config("obfuscate_noise", args.obfuscate_noise)
        .config("obfuscate_step", args.obfuscate_step);

    let sim = pipeline::simulate(&cfg)?;
    // Pruning and matching see the agent's own scores; only the logs that
    // leave the agent are obfuscated.
    let (published_a, published_b) = if args.obfuscate_noise > 0.0 || args.obfuscate_step > 0.0 {
        (
            obfuscate_log(&sim.agent_a, args.obfuscate_noise, args.obfuscate_step, cfg.seed)?,
            obfuscate_log(&sim.agent_b, args.obfuscate_noise, args.obfuscate_step, cfg.seed)?,
        )
    } else {
        (sim.agent_a.clone(), sim.agent_b.clone())
    };

    let chain = run_chain_of_trust(&cfg, &stage_cfg, &sim.population, &sim.agent_a)?;
    let table = overhead_accuracy_table(&cfg, &stage_cfg, &sim.population, &sim.agent_a)?;
    let selections = if cfg.device_count >= 2 {
        let run = pipeline::run_matching(&cfg, &sim.population, &sim.agent_a, args.tasks)?;
        export_selections_csv(&run.selections, &published_a.latest())?
    } else {
        eprintln!("note: matching needs at least two devices; selections.csv has no rows");
        format!("{SELECTIONS_HEADER}\n")
    };
    let surviving = chain.last().map_or(cfg.device_count, |s| s.surviving.len());
    manifest.config("surviving_after_chain", surviving);

    manifest.emit(
        &args.out,
        vec![
            ("trust_scores.csv", export_trust_csv(&published_a)),
            ("trust_scores_agent2.csv", export_trust_csv(&published_b)),
            ("selections.csv", selections),
            ("overhead_accuracy.csv", export_overhead_csv(&table)),
        ],
    )?;
    Ok(manifest.render())
}

fn read_log(path: &Path) -> Result<std::collections::BTreeMap<DeviceId, Vec<f64>>, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    parse_trust_csv(bytes.as_slice()).map_err(|e| CliError::Input {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn reconstruct(args: &ReconstructArgs) -> Result<String, CliError> {
    let mut manifest = RunManifest::new("reconstruct");
    manifest
        .config("agent_a", args.agent_a.display().to_string())
        .config("agent_b", args.agent_b.display().to_string())
        .config("metric", args.metric.to_string());
    let a = read_log(&args.agent_a)?;
    let b = read_log(&args.agent_b)?;
    let alignment = align_agents(&a, &b)?;
    for (d, from) in &alignment.skipped {
        let (missing, path) = match from {
            MissingFrom::AgentA => ("agent-a", &args.agent_a),
            MissingFrom::AgentB => ("agent-b", &args.agent_b),
        };
        eprintln!(
            "warning: device {d} is missing from the {missing} log {}; skipped",
            path.display()
        );
    }

    let embeddings = pipeline::reconstruct_aligned(&alignment.aligned)?;
    if reconstruction_map(&embeddings)? != embeddings {
        return Err(Error::Data("reconstruction map is not idempotent on this input".into()).into());
    }
    let distances = pairwise_distances(&embeddings, args.metric)?;
    let comparison = agent_mean_comparison(&embeddings);
    let skipped: Vec<DeviceId> = alignment.skipped.iter().map(|(d, _)| *d).collect();
    manifest
        .config("aligned_devices", embeddings.len())
        .config("skipped_devices", skipped)
        .config("mean_offdiag", mean_offdiagonal(&distances).ok())
        .config("max_mean_gap", comparison.max_mean_gap())
        .config(
            "agent_mean_correlation",
            match comparison.correlation {
                Correlation::Value(r) => Some(r),
                Correlation::Degenerate => None,
            },
        );

    manifest.emit(
        &args.out,
        vec![
            ("embeddings_unified.csv", export_embeddings_csv(&embeddings)?),
            ("distance_matrix.csv", export_matrix_csv(&distances)?),
            ("agent_comparison.csv", export_agent_comparison_csv(&comparison)),
        ],
    )?;
    Ok(manifest.render())
}

pub fn bench(args: &BenchArgs) -> Result<String, CliError> {
    if args.replicates < 1 {
        return Err(CliError::Usage("--replicates must be at least 1".into()));
    }
    let mut manifest = RunManifest::new("bench");
    let cfg = args.population.sim_config();
    cfg.validate()?;
    echo_population(&mut manifest, &args.population);
    manifest
        .config("replicates", args.replicates)
        .config("seed_stride", args.seed_stride);
    let report = replicate_benchmark(&cfg, args.replicates, args.seed_stride)?;
    eprintln!(
        "mean off-diagonal distance {:.6}, relative spread {:.4}",
        report.mean(),
        report.relative_spread()
    );
    manifest
        .config("mean_offdiag", report.mean())
        .config("relative_spread", report.relative_spread())
        .config("max_over_min", report.spread_ratio());
    manifest.emit(&args.out, vec![("replicates.csv", export_replicates_csv(&report))])?;
    Ok(manifest.render())
}

pub fn graphs(args: &GraphsArgs) -> Result<String, CliError> {
    if args.stages < 2 {
        return Err(CliError::Usage(format!("--stages must be at least 2, got {}", args.stages)));
    }
    if args.time_steps < 1 {
        return Err(CliError::Usage("--time-steps must be at least 1".into()));
    }
    let mut manifest = RunManifest::new("graphs");
    manifest
        .config("time_steps", args.time_steps)
        .config("stages", args.stages);
    let named = pipeline::coupling_graphs(args.time_steps, args.stages)?;
    let mut spectra = Vec::with_capacity(named.len());
    let mut summary = serde_json::Map::new();
    for (name, g) in &named {
        let eig = spectrum(&laplacian(g)?)?;
        summary.insert(
            name.clone(),
            json!({
                "components": g.component_count(),
                "algebraic_connectivity": eig.get(1).map(|v| v.max(0.0)),
            }),
        );
        spectra.push((name.clone(), eig));
    }
    manifest.config("graphs", summary);
    manifest.emit(
        &args.out,
        vec![
            ("graphs.csv", export_graphs_csv(&named)),
            ("spectrum.csv", export_spectrum_csv(&spectra)),
        ],
    )?;
    Ok(manifest.render())
}
