use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::agent::AgentConfig;
use crate::envs::EnvSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    DarRl,
    QLearning,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::DarRl => "dar_rl",
            Algorithm::QLearning => "q_learning",
        }
    }
}

fn default_algorithm() -> Algorithm {
    Algorithm::DarRl
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("runs")
}

/// One experiment: an environment, an algorithm, its hyper-parameters and
/// the seeds to run it with.
///
/// Stored as TOML:
///
/// ```toml
/// algorithm = "dar_rl"
/// seeds = [1, 2, 3]
/// out_dir = "runs/wumpus16"
///
/// [env]
/// name = "wumpus"
/// size = 16
///
/// [agent]
/// n_epi = 3000
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_algorithm")]
    pub algorithm: Algorithm,
    pub seeds: Vec<u64>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    pub env: EnvSpec,
    #[serde(default)]
    pub agent: AgentConfig,
}

/// Command-line values that replace fields of a loaded config.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    /// Runs this single seed instead of the configured list.
    pub seed: Option<u64>,
    /// Switches environment, keeping the configured size when the new one
    /// has a size too.
    pub env: Option<String>,
    pub size: Option<usize>,
    pub episodes: Option<usize>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config serializes")
    }

    /// Applies command-line overrides; flags always win over the document.
    pub fn apply(&mut self, overrides: &Overrides) -> Result<(), HarnessError> {
        if let Some(name) = &overrides.env {
            let size = overrides.size.or_else(|| env_size(&self.env)).unwrap_or(0);
            self.env = EnvSpec::by_name(name, size).map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        if let Some(size) = overrides.size {
            self.env = self.env.clone().with_size(size);
        }
        if let Some(seed) = overrides.seed {
            self.seeds = vec![seed];
        }
        if let Some(n) = overrides.episodes {
            self.agent.n_epi = n;
        }
        if let Some(out) = &overrides.out {
            self.out_dir = out.clone();
        }
        Ok(())
    }

    /// Lists every problem that would stop the experiment from running.
    pub fn problems(&self) -> Vec<String> {
        let mut out = self.agent.problems();
        if self.seeds.is_empty() {
            out.push("at least one seed is required".to_string());
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.seeds.len() {
            out.push("seeds must be distinct".to_string());
        }
        match self.env.build() {
            Ok(env) => {
                if self.algorithm == Algorithm::QLearning && !env.descriptor().is_discrete() {
                    out.push(format!(
                        "q_learning needs a discrete state space; `{}` is continuous",
                        self.env.name()
                    ));
                }
            }
            Err(e) => out.push(e.to_string()),
        }
        out
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::Config(problems.join("; ")))
        }
    }
}

fn env_size(spec: &EnvSpec) -> Option<usize> {
    match *spec {
        EnvSpec::Wumpus { size, .. } | EnvSpec::Office { size, .. } | EnvSpec::Taxi { size, .. } => Some(size),
        EnvSpec::WumpusExample { .. } | EnvSpec::Water => None,
    }
}
