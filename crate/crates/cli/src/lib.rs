//! Config-driven front end: compile, bound, verify and tabulate.

pub mod commands;
pub mod config;
pub mod session;

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};

use commands::Overrides;
use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "introbust", version, about = "Interventional robustness bounds for classifiers on causal networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for `table`; 0 uses every core.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output file; overrides the config's output path.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Edge budget for compilation.
    #[arg(long = "budget-edges", global = true)]
    pub budget_edges: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compile the circuit, write the cache and print stats.
    Compile,
    /// Upper and lower bounds and the decision against epsilon.
    Verify,
    /// Best-response lower bound only.
    Lb,
    /// Circuit upper bound only.
    Ub,
    /// Exhaustive optimum, best do-intervention and first-order estimate.
    Oracle,
    /// One CSV row per spec and query of each config.
    Table {
        configs: Vec<PathBuf>,
    },
    /// Summary of the network, classifier, evidence and spec.
    Info,
    /// Joint CNF in DIMACS form, with the variable map as comments, for an
    /// external d-DNNF compiler. Written to `--out`, else stdout.
    ExportCnf,
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    let over = Overrides {
        seed: cli.seed,
        workers: cli.workers,
        out: cli.out.clone(),
        budget_edges: cli.budget_edges,
    };
    let load = || -> Result<RunConfig> {
        match &cli.config {
            Some(path) => RunConfig::load(path),
            None => bail!("--config is required for this command"),
        }
    };
    match &cli.command {
        Command::Compile => commands::compile(load()?, &over),
        Command::Verify => commands::verify_cmd(load()?, &over),
        Command::Lb => commands::lb(load()?, &over),
        Command::Ub => commands::ub(load()?, &over),
        Command::Oracle => commands::oracle(load()?, &over),
        Command::Info => commands::info(load()?, &over),
        Command::ExportCnf => commands::export_cnf(load()?, &over),
        Command::Table { configs } => {
            let mut all = configs.clone();
            all.extend(cli.config.iter().cloned());
            commands::table(&all, &over)
        }
    }
}
