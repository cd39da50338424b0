//! Command-line front end for the tierbid engine: scenario files, single
//! auctions, oracle audits and scaling benchmarks.

pub mod bids;
pub mod commands;
pub mod error;
pub mod scenario;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{AuctionOptions, BenchOptions, Family, OracleOptions, RunOptions};
pub use crate::error::{CliError, CliResult};
use crate::scenario::ModeKind;

/// Seeds are recorded in TOML manifests, whose integers are signed 64-bit.
fn seed_parser() -> clap::builder::RangedU64ValueParser {
    clap::value_parser!(u64).range(..=scenario::MAX_SEED)
}

#[derive(Debug, Parser)]
#[command(name = "tierbid", version, about = "Hierarchical bandwidth auctions and their simulation")]
pub struct Cli {
    /// Worker threads for the engine (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scenario file (or a manifest written by an earlier run).
    Run(RunArgs),
    /// Resolve one auction from a bids file.
    Auction(AuctionArgs),
    /// Compare local charges with full re-execution on random instances.
    OracleCheck(OracleArgs),
    /// Time auction resolution over a grid of user counts.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub scenario: PathBuf,
    #[arg(long, value_parser = seed_parser())]
    pub seed: Option<u64>,
    #[arg(long)]
    pub mode: Option<ModeKind>,
    /// Take the longest sorted prefix that fits instead of skipping.
    #[arg(long)]
    pub prefix_winners: bool,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub replications: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AuctionArgs {
    pub bids: PathBuf,
    #[arg(long)]
    pub mode: Option<ModeKind>,
    #[arg(long)]
    pub prefix_winners: bool,
    /// Write outcome.json here instead of printing it.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Draw instances from snapshots of this scenario's workload.
    pub scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 0, value_parser = seed_parser())]
    pub seed: u64,
    #[arg(long, default_value = "equal-rate")]
    pub family: Family,
    #[arg(long, default_value_t = 50)]
    pub max_users: usize,
    #[arg(long)]
    pub prefix_winners: bool,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Replay the options recorded in an oracle_manifest.toml.
    #[arg(long, conflicts_with = "scenario")]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [120, 600, 1200, 2400])]
    pub grid: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub rounds: usize,
    #[arg(long, default_value_t = 11)]
    pub repeats: usize,
    #[arg(long, default_value_t = 2)]
    pub warmup: usize,
    #[arg(long, default_value_t = 0, value_parser = seed_parser())]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Replay the options recorded in a bench_manifest.toml.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

/// Runs one command and returns the text to print on stdout.
pub fn execute(cli: Cli) -> CliResult<String> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Invariant(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(cli.command))
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize")
}

fn dispatch(command: Command) -> CliResult<String> {
    match command {
        Command::Run(a) => {
            let opts = RunOptions {
                seed: a.seed,
                mode: a.mode,
                prefix_winners: a.prefix_winners,
                out_dir: a.out_dir,
                replications: a.replications,
            };
            let out = commands::cmd_run(&a.scenario, &opts)?;
            Ok(format!("wrote {}\n{}", out.out_dir.display(), json(&out.summary)))
        }
        Command::Auction(a) => {
            let opts = AuctionOptions { prefix_winners: a.prefix_winners, mode: a.mode, out_dir: a.out_dir.clone() };
            let (_, bytes) = commands::cmd_auction(&a.bids, &opts)?;
            Ok(match a.out_dir {
                Some(d) => format!("wrote {}", d.join("outcome.json").display()),
                None => String::from_utf8(bytes).expect("json is utf-8"),
            })
        }
        Command::OracleCheck(a) => {
            let mut opts = match &a.manifest {
                Some(p) => commands::load_options::<OracleOptions>(p)?,
                None => OracleOptions {
                    samples: a.samples,
                    seed: a.seed,
                    family: a.family,
                    max_users: a.max_users,
                    winner_rule: if a.prefix_winners { tierbid_core::WinnerRule::Prefix } else { Default::default() },
                    scenario: a.scenario,
                    ..OracleOptions::default()
                },
            };
            opts.out_dir = a.out_dir;
            Ok(json(&commands::cmd_oracle_check(&opts)?))
        }
        Command::Bench(a) => {
            let mut opts = match &a.manifest {
                Some(p) => commands::load_options::<BenchOptions>(p)?,
                None => BenchOptions {
                    grid: a.grid,
                    rounds: a.rounds,
                    repeats: a.repeats,
                    warmup: a.warmup,
                    seed: a.seed,
                    out_dir: None,
                },
            };
            opts.out_dir = a.out_dir;
            Ok(json(&commands::cmd_bench(&opts)?))
        }
    }
}
