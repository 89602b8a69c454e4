use rand::RngCore;
use serde::Serialize;

use crate::cat::{Cat, NodeId};
use crate::envs::{ActionId, EnvDescriptor, Environment, State};
use crate::Scalar;

use super::dispersion::{unstable_states, unstable_var, DispersionLog, DispersionSample};
use super::qtable::{q_update, select_action, AbstractQTable};
use super::{AgentConfig, AgentError};

/// Result of repeating one primitive action until the abstract state changes.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedStep<F: Scalar> {
    pub next_state: State,
    pub next_leaf: NodeId,
    /// Discounted reward sum over the `k` primitive steps.
    pub r_bar: F,
    pub k: usize,
    pub done: bool,
    pub success: bool,
}

/// Repeats `action` from `state` until the leaf changes, the episode ends,
/// the state stops changing, or `max_steps` primitive steps have been taken.
///
/// `state` must be the environment's current state. `max_steps` must be at
/// least one.
pub fn extended_step<F: Scalar, E: Environment + ?Sized>(
    env: &mut E,
    cat: &Cat,
    state: &[f64],
    action: ActionId,
    gamma: f64,
    max_steps: usize,
    rng: &mut dyn RngCore,
) -> Result<ExtendedStep<F>, AgentError> {
    debug_assert!(max_steps >= 1);
    let start_leaf = cat.find_abstract(state)?;
    let gamma = F::of(gamma);
    let mut prev: State = state.to_vec();
    let mut r_bar = F::zero();
    let mut discount = F::one();
    let mut k = 0;
    loop {
        let res = env.step(action, rng)?;
        r_bar = r_bar + discount * F::of(res.reward);
        discount = discount * gamma;
        k += 1;
        let next_leaf = cat.find_abstract(&res.next_state)?;
        let blocked = res.next_state == prev;
        if res.done || blocked || next_leaf != start_leaf || k >= max_steps {
            return Ok(ExtendedStep {
                next_state: res.next_state,
                next_leaf,
                r_bar,
                k,
                done: res.done,
                success: res.success,
            });
        }
        prev = res.next_state;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeOutcome {
    /// Discounted return over primitive steps.
    pub ret: f64,
    pub steps: usize,
    pub success: bool,
}

/// One epsilon-greedy training episode over abstract states, updating `q`.
pub fn train_episode<F: Scalar, E: Environment + ?Sized>(
    env: &mut E,
    cat: &Cat,
    q: &mut AbstractQTable<F>,
    config: &AgentConfig,
    epsilon: f64,
    rng: &mut dyn RngCore,
) -> Result<EpisodeOutcome, AgentError> {
    let mut out = EpisodeOutcome {
        ret: 0.0,
        steps: 0,
        success: false,
    };
    if config.horizon == 0 {
        return Ok(out);
    }
    let num_actions = env.descriptor().num_actions();
    let (alpha, gamma) = (F::of(config.alpha), F::of(config.gamma));
    let mut state = env.reset(rng);
    let mut discount = 1.0;
    while out.steps < config.horizon {
        let leaf = cat.find_abstract(&state)?;
        let action = select_action(q, leaf, num_actions, epsilon, rng);
        let ext: ExtendedStep<F> = extended_step(env, cat, &state, action, config.gamma, config.horizon - out.steps, rng)?;
        q_update(q, leaf, action, ext.r_bar, ext.k, ext.next_leaf, ext.done, alpha, gamma);
        out.ret += discount * ext.r_bar.to_f64_lossy();
        discount *= config.gamma.powi(ext.k as i32);
        out.steps += ext.k;
        if ext.done {
            out.success = ext.success;
            break;
        }
        state = ext.next_state;
    }
    Ok(out)
}

/// Replays the greedy policy of `q` for `config.n_eval` episodes.
///
/// Q-learning updates go to a scratch copy of `q`; every update appends the
/// post-update scratch value to the log. `q` itself is never modified.
pub fn evaluate<F: Scalar, E: Environment + ?Sized>(
    env: &mut E,
    cat: &Cat,
    q: &AbstractQTable<F>,
    config: &AgentConfig,
    rng: &mut dyn RngCore,
) -> Result<DispersionLog<F>, AgentError> {
    let mut scratch = q.clone();
    let mut log = DispersionLog::new();
    if config.horizon == 0 {
        return Ok(log);
    }
    let (alpha, gamma) = (F::of(config.alpha), F::of(config.gamma));
    for episode in 1..=config.n_eval {
        let mut state = env.reset(rng);
        let mut steps = 0;
        while steps < config.horizon {
            let leaf = cat.find_abstract(&state)?;
            let action = q.greedy(leaf);
            let ext: ExtendedStep<F> = extended_step(env, cat, &state, action, config.gamma, config.horizon - steps, rng)?;
            q_update(&mut scratch, leaf, action, ext.r_bar, ext.k, ext.next_leaf, ext.done, alpha, gamma);
            log.samples.push(DispersionSample {
                episode,
                step: steps,
                leaf,
                action,
                q_value: scratch.get(leaf, action),
                concrete_state: state,
            });
            steps += ext.k;
            if ext.done {
                break;
            }
            state = ext.next_state;
        }
    }
    Ok(log)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpisodeRecord {
    /// 1-based episode index.
    pub episode: usize,
    #[serde(rename = "return")]
    pub ret: f64,
    pub steps: usize,
    pub success: bool,
    pub leaf_count: usize,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainStats {
    pub records: Vec<EpisodeRecord>,
}

impl TrainStats {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Mean success over the last `window` episodes (fewer if not yet
    /// available).
    pub fn recent_success(&self, window: usize) -> f64 {
        let n = self.records.len();
        if n == 0 || window == 0 {
            return 0.0;
        }
        let tail = &self.records[n.saturating_sub(window)..];
        tail.iter().filter(|r| r.success).count() as f64 / tail.len() as f64
    }

    /// Moving-average success after every episode.
    pub fn moving_success(&self, window: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.records.len());
        let mut hits = 0usize;
        for (i, r) in self.records.iter().enumerate() {
            hits += usize::from(r.success);
            if i >= window {
                hits -= usize::from(self.records[i - window].success);
            }
            out.push(hits as f64 / (i + 1).min(window) as f64);
        }
        out
    }

    /// First 1-based episode whose moving success (over `window`, counted
    /// only once the window is full) reaches `level`.
    pub fn episodes_to(&self, level: f64, window: usize) -> Option<usize> {
        self.moving_success(window)
            .iter()
            .enumerate()
            .find(|(i, &m)| i + 1 >= window && m >= level)
            .map(|(i, _)| i + 1)
    }
}

/// Refinement check: due every `n_check` episodes, and only while the recent
/// success rate is strictly below the threshold.
pub fn needs_refinement(stats: &TrainStats, config: &AgentConfig) -> bool {
    let episode = stats.len();
    episode > 0 && episode.is_multiple_of(config.n_check) && stats.recent_success(config.success_window) < config.success_threshold
}

/// A leaf split during refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementEvent {
    pub leaf: NodeId,
    pub var: usize,
    pub children: Vec<NodeId>,
}

/// Learner state: the abstraction tree, the Q-table over its nodes, the
/// exploration rate and per-episode statistics.
#[derive(Debug, Clone)]
pub struct DarAgent<F: Scalar> {
    config: AgentConfig,
    cat: Cat,
    q: AbstractQTable<F>,
    stats: TrainStats,
    epsilon: f64,
    refinements: Vec<RefinementEvent>,
}

#[derive(Debug, Clone)]
pub struct LearnOutcome<F: Scalar> {
    pub cat: Cat,
    pub q: AbstractQTable<F>,
    pub stats: TrainStats,
    pub refinements: Vec<RefinementEvent>,
}

impl<F: Scalar> DarAgent<F> {
    /// Single-leaf tree over the environment's variables and an all-zero table.
    pub fn new(descriptor: &EnvDescriptor, config: AgentConfig) -> Result<Self, AgentError> {
        config.validate()?;
        let cat = Cat::with_min_real_width(descriptor.variable_specs.clone(), config.min_real_width)?;
        Ok(Self {
            q: AbstractQTable::new(descriptor.num_actions()),
            epsilon: config.epsilon_start,
            config,
            cat,
            stats: TrainStats::default(),
            refinements: Vec::new(),
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn cat(&self) -> &Cat {
        &self.cat
    }

    pub fn q(&self) -> &AbstractQTable<F> {
        &self.q
    }

    pub fn stats(&self) -> &TrainStats {
        &self.stats
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Every split performed so far, in order.
    pub fn refinements(&self) -> &[RefinementEvent] {
        &self.refinements
    }

    /// Greedy action for a concrete state under the current abstraction.
    pub fn greedy_action(&self, state: &[f64]) -> Result<ActionId, AgentError> {
        Ok(self.q.greedy(self.cat.find_abstract(state)?))
    }

    /// Runs one training episode, records it and decays exploration.
    pub fn train_one<E: Environment + ?Sized>(&mut self, env: &mut E, rng: &mut dyn RngCore) -> Result<EpisodeRecord, AgentError> {
        let outcome = train_episode(env, &self.cat, &mut self.q, &self.config, self.epsilon, rng)?;
        let record = EpisodeRecord {
            episode: self.stats.len() + 1,
            ret: outcome.ret,
            steps: outcome.steps,
            success: outcome.success,
            leaf_count: self.cat.leaf_count(),
            epsilon: self.epsilon,
        };
        self.stats.records.push(record);
        self.epsilon = (self.epsilon * self.config.epsilon_decay).max(self.config.epsilon_min);
        Ok(record)
    }

    pub fn evaluate<E: Environment + ?Sized>(&self, env: &mut E, rng: &mut dyn RngCore) -> Result<DispersionLog<F>, AgentError> {
        evaluate(env, &self.cat, &self.q, &self.config, rng)
    }

    /// Splits every unstable leaf found in `log` along its accountable
    /// variable and seeds each child's Q row with its parent's. Leaves with
    /// nothing left to split are skipped.
    pub fn refine_from_log(&mut self, log: &DispersionLog<F>) -> Result<Vec<RefinementEvent>, AgentError> {
        let mut events = Vec::new();
        for leaf in unstable_states(log, self.config.min_samples) {
            let var = match unstable_var(log, leaf, &self.cat, self.config.split_factor, self.config.min_samples) {
                Ok(v) => v,
                Err(AgentError::ExhaustedLeaf(_)) | Err(AgentError::InsufficientSamples(_)) => continue,
                Err(e) => return Err(e),
            };
            let children = self.cat.refine_leaf(leaf, var, self.config.split_factor)?;
            for &child in &children {
                self.q.copy_row(leaf, child);
            }
            events.push(RefinementEvent { leaf, var, children });
        }
        self.refinements.extend(events.iter().cloned());
        Ok(events)
    }

    /// Evaluates and refines if the refinement condition holds.
    pub fn maybe_refine<E: Environment + ?Sized>(
        &mut self,
        env: &mut E,
        rng: &mut dyn RngCore,
    ) -> Result<Option<Vec<RefinementEvent>>, AgentError> {
        if !needs_refinement(&self.stats, &self.config) {
            return Ok(None);
        }
        let log = self.evaluate(env, rng)?;
        self.refine_from_log(&log).map(Some)
    }

    pub fn into_outcome(self) -> LearnOutcome<F> {
        LearnOutcome {
            cat: self.cat,
            q: self.q,
            stats: self.stats,
            refinements: self.refinements,
        }
    }
}

/// Full learning run: `n_epi` training episodes interleaved with
/// evaluation and refinement.
pub fn learn<F: Scalar, E: Environment + ?Sized>(
    env: &mut E,
    config: &AgentConfig,
    rng: &mut dyn RngCore,
) -> Result<LearnOutcome<F>, AgentError> {
    let mut agent = DarAgent::<F>::new(env.descriptor(), config.clone())?;
    for _ in 0..config.n_epi {
        agent.train_one(env, rng)?;
        agent.maybe_refine(env, rng)?;
    }
    Ok(agent.into_outcome())
}
