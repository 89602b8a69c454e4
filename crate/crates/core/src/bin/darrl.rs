use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use darrl::harness::{self, ExperimentConfig, HarnessError, Overrides};

/// Learn tasks and their state abstractions; compare with tabular Q-learning.
#[derive(Parser)]
#[command(name = "darrl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment for every seed. Flags override the config file.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Run only this seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Environment name: wumpus, wumpus_example, office, taxi or water.
        #[arg(long)]
        env: Option<String>,
        /// Grid size for environments that have one.
        #[arg(long)]
        size: Option<usize>,
        /// Number of training episodes.
        #[arg(long)]
        episodes: Option<usize>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run dar_rl and q_learning with the same seeds.
    Compare {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print a stored tree document as DOT.
    ExportDot {
        #[arg(long)]
        cat: PathBuf,
    },
}

fn summary(label: &str, set: &harness::ArtifactSet) {
    let stats: Vec<_> = set.runs.iter().map(|r| &r.stats).collect();
    let last: Vec<String> = stats
        .iter()
        .map(|s| format!("{:.2}", s.recent_success(harness::MOVING_WINDOW)))
        .collect();
    let median = harness::median_episodes_to(&stats, 0.9).map_or("never".to_string(), |e| e.to_string());
    println!(
        "{label}: {} runs, final moving success [{}], median episodes to 0.9: {median}, output in {}",
        stats.len(),
        last.join(", "),
        set.out_dir.display()
    );
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Train {
            config,
            seed,
            env,
            size,
            episodes,
            out,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            cfg.apply(&Overrides {
                seed,
                env,
                size,
                episodes,
                out,
            })?;
            let set = harness::run_experiment(&cfg)?;
            summary(cfg.algorithm.name(), &set);
        }
        Command::Compare { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let cmp = harness::compare(&cfg)?;
            summary("dar_rl", &cmp.dar_rl);
            summary("q_learning", &cmp.q_learning);
            println!("side-by-side aggregate: {}", cmp.side_by_side.display());
        }
        Command::ExportDot { cat } => {
            let text = std::fs::read_to_string(&cat).map_err(|source| HarnessError::Io { path: cat, source })?;
            print!("{}", harness::export_cat_dot(&text)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
