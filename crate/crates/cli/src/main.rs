//! `phaseprobe`: generate data, train, analyze checkpoints, verify the sparse
//! theory and summarize results, all driven by one JSON experiment config.

mod commands;
mod store;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "phaseprobe",
    version,
    about = "Track how much of a network's performance a simpler classifier explains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write train/test datasets for every seed.
    GenData(Common),
    /// Train the network for every seed, writing (or resuming) checkpoints.
    Train(Common),
    /// Evaluate checkpoints against the simple model; write series, reports and summaries.
    Analyze(Common),
    /// Sweep the sparse-noise theory grid and write the accuracy summary.
    Theory(Common),
    /// Print and write a summary of existing analysis and theory outputs.
    Report(Common),
}

#[derive(Args, Clone)]
pub struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Run a single seed instead of the configured list.
    #[arg(long)]
    seed_override: Option<u64>,
    /// Worker threads for seed- and checkpoint-level parallelism (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Replace existing outputs that differ from what this run produces.
    #[arg(long)]
    force: bool,
    /// Also emit SVG plots.
    #[arg(long)]
    svg: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (run, common): (fn(&commands::Context) -> anyhow::Result<()>, &Common) = match &cli.command
    {
        Command::GenData(c) => (commands::gen_data, c),
        Command::Train(c) => (commands::train, c),
        Command::Analyze(c) => (commands::analyze, c),
        Command::Theory(c) => (commands::theory, c),
        Command::Report(c) => (commands::report, c),
    };
    let result = commands::Context::new(common).and_then(|ctx| {
        let mut pool = rayon::ThreadPoolBuilder::new();
        if let Some(n) = common.workers {
            pool = pool.num_threads(n.max(1));
        }
        pool.build()?.install(|| run(&ctx))
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
