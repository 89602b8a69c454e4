//! Q-learning over abstract states with online abstraction refinement.
//!
//! One training episode acts through *extended actions*: the chosen
//! primitive action is repeated until the abstract state changes, the
//! episode ends, the concrete state stops changing, or the horizon runs out.
//! Every `n_check` episodes, if the recent success rate is below the
//! threshold, the agent replays its frozen greedy policy for `n_eval`
//! episodes, logs Q-value dispersion per (abstract state, action), flags
//! the high-dispersion abstract states and splits each one along the
//! variable that best separates its logged values.

mod dispersion;
mod learner;
mod qtable;

pub use dispersion::{
    cluster_high, leaf_scores, pair_dispersion, std_dev, two_means, unstable_states, unstable_var, DispersionLog, DispersionSample,
};
pub use learner::{
    evaluate, extended_step, learn, needs_refinement, train_episode, DarAgent, EpisodeOutcome, EpisodeRecord, ExtendedStep, LearnOutcome,
    RefinementEvent, TrainStats,
};
pub use qtable::{q_update, select_action, AbstractQTable};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cat::{CatError, NodeId};
use crate::envs::EnvError;

#[derive(Debug, Error, PartialEq)]
pub enum AgentError {
    #[error("invalid agent configuration: {0}")]
    InvalidConfig(String),
    #[error("abstract state {0} has no splittable variable")]
    ExhaustedLeaf(NodeId),
    #[error("abstract state {0} has too few logged samples")]
    InsufficientSamples(NodeId),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Cat(#[from] CatError),
}

/// Hyper-parameters of one learning run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    /// Multiplicative decay applied after every episode.
    pub epsilon_decay: f64,
    pub epsilon_min: f64,
    /// Number of parts an abstract state is split into.
    pub split_factor: usize,
    pub n_epi: usize,
    pub n_eval: usize,
    pub n_check: usize,
    pub success_window: usize,
    pub success_threshold: f64,
    /// Samples a (state, action) pair needs before its dispersion counts.
    pub min_samples: usize,
    /// Maximum number of primitive steps per episode.
    pub horizon: usize,
    pub min_real_width: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            gamma: 0.95,
            epsilon_start: 0.95,
            epsilon_decay: 0.99,
            epsilon_min: 0.05,
            split_factor: 2,
            n_epi: 1000,
            n_eval: 10,
            n_check: 50,
            success_window: 100,
            success_threshold: 0.6,
            min_samples: 5,
            horizon: 100,
            min_real_width: crate::cat::DEFAULT_MIN_REAL_WIDTH,
        }
    }
}

impl AgentConfig {
    /// Lists every violated constraint.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let unit = |x: f64| x > 0.0 && x <= 1.0;
        let prob = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.alpha) {
            out.push(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        if !unit(self.gamma) {
            out.push(format!("gamma must lie in (0, 1], got {}", self.gamma));
        }
        for (name, v) in [
            ("epsilon_start", self.epsilon_start),
            ("epsilon_decay", self.epsilon_decay),
            ("epsilon_min", self.epsilon_min),
            ("success_threshold", self.success_threshold),
        ] {
            if !prob(v) {
                out.push(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if self.split_factor < 2 {
            out.push(format!("split_factor must be at least 2, got {}", self.split_factor));
        }
        for (name, v) in [
            ("n_eval", self.n_eval),
            ("n_check", self.n_check),
            ("success_window", self.success_window),
            ("min_samples", self.min_samples),
        ] {
            if v == 0 {
                out.push(format!("{name} must be at least 1"));
            }
        }
        if !(self.min_real_width > 0.0 && self.min_real_width.is_finite()) {
            out.push(format!("min_real_width must be positive, got {}", self.min_real_width));
        }
        out
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(AgentError::InvalidConfig(problems.join("; ")))
        }
    }
}
