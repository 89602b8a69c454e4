//! Simultaneous learning of a task's solution and its state abstraction.
//!
//! The learner runs tabular Q-learning over the leaves of a conditional
//! abstraction tree ([`cat::Cat`]), starting from a single abstract state
//! that covers the whole state space. Periodically it replays its greedy
//! policy, logs how widely Q-values spread inside each abstract state, and
//! splits the states whose values disagree the most along the variable that
//! best explains the spread.
//!
//! Modules:
//! - [`cat`]: the abstraction tree, refinement relations, document and DOT formats.
//! - [`agent`]: abstract Q-learning with extended actions and dispersion-driven refinement.
//! - [`envs`]: Wumpus, Office, Taxi and Water World simulators.
//! - [`baseline`]: plain tabular Q-learning over concrete states.
//! - [`harness`]: experiment configuration, multi-seed runs and artifacts.
//!
//! Value arithmetic is generic over [`Scalar`]; the aliases below fix it to
//! `f64`, which is what the harness uses.
//!
//! ```
//! use darrl::agent::{learn, AgentConfig};
//! use darrl::envs::EnvSpec;
//! use rand::SeedableRng;
//! use rand_chacha::ChaCha8Rng;
//!
//! let mut env = EnvSpec::Taxi { size: 5, slip: 0.0 }.build()?;
//! let config = AgentConfig { n_epi: 200, gamma: 0.999, horizon: 200, ..AgentConfig::default() };
//! let out = learn::<f64, _>(env.as_mut(), &config, &mut ChaCha8Rng::seed_from_u64(1))?;
//! println!("{} leaves, recent success {:.2}", out.cat.leaf_count(), out.stats.recent_success(100));
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod agent;
pub mod baseline;
pub mod cat;
pub mod envs;
pub mod harness;

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Floating-point type used for Q-values, returns and dispersion statistics.
pub trait Scalar: Float + FromPrimitive + Debug + Display + Default + Send + Sync + 'static {
    /// Lossy conversion from an `f64` literal or reward.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to every float type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub use agent::{AgentConfig, AgentError, EpisodeRecord, TrainStats};
pub use cat::{Abstraction, Cat, CatError, Interval, NodeId, VarKind, VariableSpec};
pub use envs::{ActionId, EnvSpec, Environment};

pub type QTable = agent::AbstractQTable<f64>;
pub type DispersionLog = agent::DispersionLog<f64>;
pub type DispersionSample = agent::DispersionSample<f64>;
pub type DarAgent = agent::DarAgent<f64>;
pub type LearnOutcome = agent::LearnOutcome<f64>;
pub type ConcreteQTable = baseline::ConcreteQTable<f64>;

pub type QTable32 = agent::AbstractQTable<f32>;
pub type DarAgent32 = agent::DarAgent<f32>;
