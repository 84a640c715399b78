//! `trust-recon`: simulate two trust agents, reconstruct embeddings from the
//! published scores, benchmark replicate stability and export coupling-graph
//! spectra. Every command writes plot-ready CSVs and prints a JSON manifest.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use trust_recon::analysis::Metric;
use trust_recon::sim::{SimConfig, DEFAULT_SEED};


#[derive(Debug, Parser)]
#[command(name = "trust-recon", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate both agents and write trust logs, selections and the overhead table.
    Simulate(SimulateArgs),
    /// Rebuild embeddings from two trust logs and compare them.
    Reconstruct(ReconstructArgs),
    /// Repeat the simulate/reconstruct pipeline over consecutive seeds.
    Bench(BenchArgs),
    /// Export the coupling graphs and their Laplacian spectra.
    Graphs(GraphsArgs),
}

#[derive(Debug, Clone, Args)]
pub struct PopulationArgs {
    /// Number of simulated devices N.
    #[arg(long, default_value_t = 20)]
    pub devices: usize,
    /// Trust evaluations per device, T + 1.
    #[arg(long, default_value_t = 10)]
    pub time_steps: usize,
    /// Embedding dimension m.
    #[arg(long, default_value_t = 128)]
    pub dim: usize,
    /// Observation noise standard deviation σ.
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    /// Probability that a device is labelled trustworthy.
    #[arg(long, default_value_t = 0.7)]
    pub p_trust: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

impl PopulationArgs {
    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            device_count: self.devices,
            time_steps: self.time_steps,
            embedding_dim: self.dim,
            noise_std: self.sigma,
            trust_prob: self.p_trust,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub population: PopulationArgs,
    /// Pruning stages K in the chain of trust.
    #[arg(long, default_value_t = 3)]
    pub stages: usize,
    /// Rows of the overhead/accuracy table.
    #[arg(long, default_value_t = 5)]
    pub table_stages: usize,
    /// Weight of the continuous score when combining with a stage score.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Number of sampled matching tasks.
    #[arg(long, default_value_t = 5)]
    pub tasks: usize,
    /// Gaussian noise added to every published score.
    #[arg(long, default_value_t = 0.0)]
    pub obfuscate_noise: f64,
    /// Quantisation step applied to published scores (0 disables).
    #[arg(long, default_value_t = 0.0)]
    pub obfuscate_step: f64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Trust log of the first agent.
    #[arg(long)]
    pub agent_a: PathBuf,
    /// Trust log of the second agent.
    #[arg(long)]
    pub agent_b: PathBuf,
    #[arg(long, default_value_t = Metric::Euclidean)]
    pub metric: Metric,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub population: PopulationArgs,
    #[arg(long, default_value_t = 5)]
    pub replicates: usize,
    /// Seed increment between replicates.
    #[arg(long, default_value_t = 1)]
    pub seed_stride: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GraphsArgs {
    /// Time steps matched by G.
    #[arg(long, default_value_t = 10)]
    pub time_steps: usize,
    /// Evaluation stages m matched by H and L.
    #[arg(long, default_value_t = 4)]
    pub stages: usize,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Simulate(args) => commands::simulate(&args),
        Command::Reconstruct(args) => commands::reconstruct(&args),
        Command::Bench(args) => commands::bench(&args),
        Command::Graphs(args) => commands::graphs(&args),
    };
    match result {
        Ok(manifest) => {
            println!("{manifest}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
