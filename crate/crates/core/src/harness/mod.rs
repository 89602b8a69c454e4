//! Experiment runner: configuration, multi-seed runs and artifacts.
//!
//! A run directory holds, per seed, a metrics CSV (`run_seed{N}.csv`) and,
//! for `dar_rl`, the final tree as a document (`cat_seed{N}.json`) and as DOT
//! (`cat_seed{N}.dot`). `aggregate.csv` has the per-episode mean and standard
//! deviation of moving-average success across seeds, and `manifest.json`
//! records the config, seeds, crate version and produced files. Every
//! artifact is a pure function of the config, so reruns are byte-identical.

mod config;

pub use config::{Algorithm, ExperimentConfig, Overrides};

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::agent::{learn, AgentError, TrainStats};
use crate::baseline::{concrete_q_learn, BaselineError};
use crate::cat::{export_dot, Cat, CatError};
use crate::envs::EnvError;

/// Window of the `moving_success_100` column.
pub const MOVING_WINDOW: usize = 100;

pub const METRICS_HEADER: &str = "episode,return,steps,success,moving_success_100,leaf_count,epsilon";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error("could not parse configuration: {0}")]
    Parse(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Cat(#[from] CatError),
}

/// Result of one seed.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub seed: u64,
    pub stats: TrainStats,
    /// Final tree; `None` for the baseline.
    pub cat: Option<Cat>,
}

/// Files written by [`run_experiment`], plus the in-memory results.
#[derive(Debug, Clone)]
pub struct ArtifactSet {
    pub out_dir: PathBuf,
    pub run_csvs: Vec<PathBuf>,
    pub cat_documents: Vec<PathBuf>,
    pub dot_files: Vec<PathBuf>,
    pub aggregate_csv: PathBuf,
    pub manifest: PathBuf,
    pub runs: Vec<RunResult>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    algorithm: &'static str,
    seeds: &'a [u64],
    config: &'a ExperimentConfig,
    files: Vec<String>,
}

/// Runs one seed without touching the file system.
pub fn run_seed(config: &ExperimentConfig, seed: u64) -> Result<RunResult, HarnessError> {
    let mut env = config.env.build()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(match config.algorithm {
        Algorithm::DarRl => {
            let out = learn::<f64, _>(&mut env, &config.agent, &mut rng)?;
            RunResult {
                seed,
                stats: out.stats,
                cat: Some(out.cat),
            }
        }
        Algorithm::QLearning => {
            let out = concrete_q_learn::<f64, _>(&mut env, &config.agent, &mut rng)?;
            RunResult {
                seed,
                stats: out.stats,
                cat: None,
            }
        }
    })
}

/// Validates `config`, runs every seed in parallel and writes the artifacts.
/// Nothing is written if validation fails.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ArtifactSet, HarnessError> {
    config.validate()?;
    let runs: Vec<RunResult> = config
        .seeds
        .par_iter()
        .map(|&seed| run_seed(config, seed))
        .collect::<Result<_, _>>()?;
    write_artifacts(config, runs)
}

fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_artifacts(config: &ExperimentConfig, runs: Vec<RunResult>) -> Result<ArtifactSet, HarnessError> {
    let dir = &config.out_dir;
    create_dir(dir)?;
    let mut set = ArtifactSet {
        out_dir: dir.clone(),
        run_csvs: Vec::new(),
        cat_documents: Vec::new(),
        dot_files: Vec::new(),
        aggregate_csv: dir.join("aggregate.csv"),
        manifest: dir.join("manifest.json"),
        runs: Vec::new(),
    };
    for run in &runs {
        let path = dir.join(format!("run_seed{}.csv", run.seed));
        write_file(&path, &metrics_csv(&run.stats))?;
        set.run_csvs.push(path);
        if let Some(cat) = &run.cat {
            let doc = dir.join(format!("cat_seed{}.json", run.seed));
            write_file(&doc, &cat.to_document())?;
            set.cat_documents.push(doc);
            let dot = dir.join(format!("cat_seed{}.dot", run.seed));
            write_file(&dot, &export_dot(cat))?;
            set.dot_files.push(dot);
        }
    }
    let stats: Vec<&TrainStats> = runs.iter().map(|r| &r.stats).collect();
    write_file(&set.aggregate_csv, &aggregate_csv(&stats))?;

    let files = set
        .run_csvs
        .iter()
        .chain(&set.cat_documents)
        .chain(&set.dot_files)
        .chain(std::iter::once(&set.aggregate_csv))
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        algorithm: config.algorithm.name(),
        seeds: &config.seeds,
        config,
        files,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&set.manifest, &(json + "\n"))?;
    set.runs = runs;
    Ok(set)
}

/// Per-episode metrics, one row per episode.
pub fn metrics_csv(stats: &TrainStats) -> String {
    let moving = stats.moving_success(MOVING_WINDOW);
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for (r, m) in stats.records.iter().zip(moving) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.episode,
            r.ret,
            r.steps,
            u8::from(r.success),
            m,
            r.leaf_count,
            r.epsilon
        );
    }
    out
}

/// Mean and population standard deviation of moving-average success across
/// runs, per episode. Runs shorter than the longest one stop contributing
/// once they end.
pub fn aggregate_moving_success(stats: &[&TrainStats]) -> Vec<(usize, f64, f64)> {
    let series: Vec<Vec<f64>> = stats.iter().map(|s| s.moving_success(MOVING_WINDOW)).collect();
    let len = series.iter().map(Vec::len).max().unwrap_or(0);
    (0..len)
        .map(|i| {
            let xs: Vec<f64> = series.iter().filter_map(|s| s.get(i).copied()).collect();
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            (i + 1, mean, var.sqrt())
        })
        .collect()
}

pub fn aggregate_csv(stats: &[&TrainStats]) -> String {
    let mut out = String::from("episode,mean_moving_success_100,std_moving_success_100,runs\n");
    let runs = stats.len();
    for (episode, mean, std) in aggregate_moving_success(stats) {
        let _ = writeln!(out, "{episode},{mean},{std},{runs}");
    }
    out
}

/// Output of [`compare`].
#[derive(Debug, Clone)]
pub struct Comparison {
    pub dar_rl: ArtifactSet,
    pub q_learning: ArtifactSet,
    pub side_by_side: PathBuf,
}

/// Runs `dar_rl` and `q_learning` with the same seeds, into `dar_rl/` and
/// `q_learning/` under the configured output directory, and writes
/// `compare.csv` with both aggregates side by side.
pub fn compare(config: &ExperimentConfig) -> Result<Comparison, HarnessError> {
    let variant = |algorithm: Algorithm| ExperimentConfig {
        algorithm,
        out_dir: config.out_dir.join(algorithm.name()),
        ..config.clone()
    };
    let (dar_cfg, q_cfg) = (variant(Algorithm::DarRl), variant(Algorithm::QLearning));
    dar_cfg.validate()?;
    q_cfg.validate()?;
    let dar_rl = run_experiment(&dar_cfg)?;
    let q_learning = run_experiment(&q_cfg)?;

    let agg = |set: &ArtifactSet| aggregate_moving_success(&set.runs.iter().map(|r| &r.stats).collect::<Vec<_>>());
    let (a, b) = (agg(&dar_rl), agg(&q_learning));
    let mut out = String::from("episode,dar_rl_mean,dar_rl_std,q_learning_mean,q_learning_std\n");
    for i in 0..a.len().max(b.len()) {
        let cell = |v: &[(usize, f64, f64)]| {
            v.get(i)
                .map_or((String::new(), String::new()), |r| (r.1.to_string(), r.2.to_string()))
        };
        let ((am, asd), (bm, bsd)) = (cell(&a), cell(&b));
        let _ = writeln!(out, "{},{am},{asd},{bm},{bsd}", i + 1);
    }
    let side_by_side = config.out_dir.join("compare.csv");
    write_file(&side_by_side, &out)?;
    Ok(Comparison {
        dar_rl,
        q_learning,
        side_by_side,
    })
}

/// DOT text for a stored tree document.
pub fn export_cat_dot(document: &str) -> Result<String, HarnessError> {
    Ok(export_dot(&Cat::from_document(document)?))
}

/// Median over runs of the first episode at which moving-average success
/// reaches `level`. Runs that never reach it count as `None`, which sorts
/// above every number.
pub fn median_episodes_to(runs: &[&TrainStats], level: f64) -> Option<usize> {
    if runs.is_empty() {
        return None;
    }
    let mut hits: Vec<Option<usize>> = runs.iter().map(|s| s.episodes_to(level, MOVING_WINDOW)).collect();
    hits.sort_by_key(|h| h.unwrap_or(usize::MAX));
    hits[(hits.len() - 1) / 2]
}
