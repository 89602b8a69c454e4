//! Plain tabular Q-learning over concrete states, for comparison.

use rand::{Rng, RngCore};
use thiserror::Error;

use crate::agent::{AgentConfig, AgentError, EpisodeRecord, TrainStats};
use crate::cat::VariableSpec;
use crate::envs::{ActionId, EnvDescriptor, EnvError, Environment};
use crate::Scalar;

/// Largest state space the dense table will allocate.
pub const MAX_CONCRETE_STATES: u64 = 1 << 26;

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("tabular Q-learning needs a discrete state space; `{0}` has real-valued variables")]
    ContinuousState(String),
    #[error("state space of {0} cells is too large for a dense table")]
    TooLarge(u64),
    #[error("state {0:?} is outside the environment's variable ranges")]
    OutOfRange(Vec<f64>),
    #[error(transparent)]
    Config(#[from] AgentError),
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// Q-values for every (concrete state, action) pair of a discrete
/// environment, stored densely in mixed-radix order. Unvisited pairs are 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcreteQTable<F: Scalar> {
    specs: Vec<VariableSpec>,
    radices: Vec<usize>,
    num_actions: usize,
    values: Vec<F>,
}

impl<F: Scalar> ConcreteQTable<F> {
    pub fn new(descriptor: &EnvDescriptor) -> Result<Self, BaselineError> {
        if !descriptor.is_discrete() {
            return Err(BaselineError::ContinuousState(descriptor.name.clone()));
        }
        let mut radices = Vec::with_capacity(descriptor.variable_specs.len());
        let mut cells: u64 = 1;
        for spec in &descriptor.variable_specs {
            spec.validate().map_err(AgentError::from)?;
            let card = spec.cardinality().unwrap_or(0);
            cells = cells.saturating_mul(card);
            radices.push(card as usize);
        }
        if cells > MAX_CONCRETE_STATES {
            return Err(BaselineError::TooLarge(cells));
        }
        let num_actions = descriptor.num_actions();
        Ok(Self {
            specs: descriptor.variable_specs.clone(),
            radices,
            num_actions,
            values: vec![F::zero(); cells as usize * num_actions],
        })
    }

    pub fn num_states(&self) -> usize {
        self.radices.iter().product()
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// Mixed-radix index of `state`, or `None` if it is out of range.
    pub fn index_of(&self, state: &[f64]) -> Option<usize> {
        if state.len() != self.specs.len() {
            return None;
        }
        let mut idx = 0usize;
        for ((spec, &radix), &v) in self.specs.iter().zip(&self.radices).zip(state) {
            if !spec.admits(v) {
                return None;
            }
            idx = idx * radix + (v - spec.lo) as usize;
        }
        Some(idx)
    }

    fn slot(&self, state: &[f64]) -> Result<usize, BaselineError> {
        self.index_of(state)
            .map(|i| i * self.num_actions)
            .ok_or_else(|| BaselineError::OutOfRange(state.to_vec()))
    }

    pub fn get(&self, state: &[f64], action: ActionId) -> Result<F, BaselineError> {
        Ok(self.values[self.slot(state)? + action.0])
    }

    pub fn set(&mut self, state: &[f64], action: ActionId, value: F) -> Result<(), BaselineError> {
        let slot = self.slot(state)?;
        self.values[slot + action.0] = value;
        Ok(())
    }

    pub fn row(&self, state: &[f64]) -> Result<&[F], BaselineError> {
        let slot = self.slot(state)?;
        Ok(&self.values[slot..slot + self.num_actions])
    }

    pub fn max_value(&self, state: &[f64]) -> Result<F, BaselineError> {
        Ok(self.row(state)?.iter().copied().fold(F::neg_infinity(), F::max))
    }

    /// Highest-valued action; ties go to the lowest action id.
    pub fn greedy(&self, state: &[f64]) -> Result<ActionId, BaselineError> {
        let row = self.row(state)?;
        let mut best = 0;
        for a in 1..row.len() {
            if row[a] > row[best] {
                best = a;
            }
        }
        Ok(ActionId(best))
    }
}

#[derive(Debug, Clone)]
pub struct BaselineOutcome<F: Scalar> {
    pub q: ConcreteQTable<F>,
    pub stats: TrainStats,
}

/// `n_epi` episodes of epsilon-greedy one-step Q-learning over concrete
/// states, using the same learning rate, discount, horizon and exploration
/// schedule as the abstract learner.
///
/// The `leaf_count` column of each record holds the number of concrete
/// states, the size of the baseline's fixed partition.
pub fn concrete_q_learn<F: Scalar, E: Environment + ?Sized>(
    env: &mut E,
    config: &AgentConfig,
    rng: &mut dyn RngCore,
) -> Result<BaselineOutcome<F>, BaselineError> {
    config.validate()?;
    let mut q = ConcreteQTable::<F>::new(env.descriptor())?;
    let num_actions = q.num_actions();
    let num_states = q.num_states();
    let (alpha, gamma) = (F::of(config.alpha), F::of(config.gamma));
    let mut stats = TrainStats::default();
    let mut epsilon = config.epsilon_start;
    for episode in 1..=config.n_epi {
        let mut record = EpisodeRecord {
            episode,
            ret: 0.0,
            steps: 0,
            success: false,
            leaf_count: num_states,
            epsilon,
        };
        if config.horizon > 0 {
            let mut state = env.reset(rng);
            let mut discount = 1.0;
            while record.steps < config.horizon {
                let action = if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
                    ActionId(rng.gen_range(0..num_actions))
                } else {
                    q.greedy(&state)?
                };
                let res = env.step(action, rng)?;
                let target = if res.done {
                    F::of(res.reward)
                } else {
                    F::of(res.reward) + gamma * q.max_value(&res.next_state)?
                };
                let old = q.get(&state, action)?;
                q.set(&state, action, (F::one() - alpha) * old + alpha * target)?;
                record.ret += discount * res.reward;
                discount *= config.gamma;
                record.steps += 1;
                if res.done {
                    record.success = res.success;
                    break;
                }
                state = res.next_state;
            }
        }
        stats.records.push(record);
        epsilon = (epsilon * config.epsilon_decay).max(config.epsilon_min);
    }
    Ok(BaselineOutcome { q, stats })
}
