//! Seeded benchmark simulators behind one factored-state interface.
//!
//! Every environment exposes its state as a vector of numbers described by
//! [`VariableSpec`]s, so the abstraction tree can be built without any
//! domain knowledge. Grid worlds use 1-based coordinates with `y = 1` as the
//! northern row.

mod office;
mod taxi;
mod water;
mod wumpus;

pub use office::{OfficeLayout, OfficeWorld};
pub use taxi::{TaxiWorld, TAXI_IN_CAR};
pub use water::{Ball, WaterWorld, WATER_AGENT_SPEED, WATER_BALL_RADIUS, WATER_BALL_SPEED, WATER_SIZE};
pub use wumpus::{Cell, WumpusLayout, WumpusRewards, WumpusWorld};

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cat::{VarKind, VariableSpec};

pub type State = Vec<f64>;

/// Index of a primitive action in an environment's action list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(pub usize);

impl ActionId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("action {0} is not defined for this environment")]
    InvalidAction(usize),
    #[error("step called on a finished episode; call reset first")]
    EpisodeOver,
    #[error("invalid environment configuration: {0}")]
    InvalidConfig(String),
    #[error("could not generate a connected layout after {0} attempts")]
    LayoutGeneration(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionSpec {
    pub id: ActionId,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvDescriptor {
    pub name: String,
    pub variable_specs: Vec<VariableSpec>,
    pub actions: Vec<ActionSpec>,
    pub horizon_hint: usize,
}

impl EnvDescriptor {
    pub(crate) fn new(name: &str, variable_specs: Vec<VariableSpec>, actions: &[&str], horizon_hint: usize) -> Self {
        Self {
            name: name.to_string(),
            variable_specs,
            actions: actions
                .iter()
                .enumerate()
                .map(|(i, n)| ActionSpec {
                    id: ActionId(i),
                    name: n.to_string(),
                })
                .collect(),
            horizon_hint,
        }
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn is_discrete(&self) -> bool {
        self.variable_specs.iter().all(|s| s.kind == VarKind::Integer)
    }

    /// True if `state` is inside every variable's global range.
    pub fn admits(&self, state: &[f64]) -> bool {
        state.len() == self.variable_specs.len() && self.variable_specs.iter().zip(state).all(|(s, &v)| s.admits(v))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_state: State,
    pub reward: f64,
    pub done: bool,
    /// Episode ended at the goal condition. Implies `done`.
    pub success: bool,
}

/// A resettable, steppable simulator. All randomness comes from the caller's
/// generator so that a seed fixes the whole trajectory.
pub trait Environment {
    fn descriptor(&self) -> &EnvDescriptor;

    /// Starts a new episode and returns the initial state.
    fn reset(&mut self, rng: &mut dyn RngCore) -> State;

    fn step(&mut self, action: ActionId, rng: &mut dyn RngCore) -> Result<StepResult, EnvError>;

    fn state(&self) -> &[f64];
}

impl<E: Environment + ?Sized> Environment for Box<E> {
    fn descriptor(&self) -> &EnvDescriptor {
        (**self).descriptor()
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> State {
        (**self).reset(rng)
    }

    fn step(&mut self, action: ActionId, rng: &mut dyn RngCore) -> Result<StepResult, EnvError> {
        (**self).step(action, rng)
    }

    fn state(&self) -> &[f64] {
        (**self).state()
    }
}

/// Compass moves shared by the grid worlds, in action-id order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Dir {
    East,
    West,
    North,
    South,
}

impl Dir {
    pub(crate) const ALL: [Dir; 4] = [Dir::East, Dir::West, Dir::North, Dir::South];
    pub(crate) const NAMES: [&'static str; 4] = ["E", "W", "N", "S"];

    pub(crate) fn from_action(a: usize) -> Option<Dir> {
        Self::ALL.get(a).copied()
    }

    pub(crate) fn delta(self) -> (i64, i64) {
        match self {
            Dir::East => (1, 0),
            Dir::West => (-1, 0),
            Dir::North => (0, -1),
            Dir::South => (0, 1),
        }
    }

    pub(crate) fn perpendicular(self) -> [Dir; 2] {
        match self {
            Dir::East | Dir::West => [Dir::North, Dir::South],
            Dir::North | Dir::South => [Dir::East, Dir::West],
        }
    }

    /// The intended direction with probability `1 - 2 * slip`, otherwise one
    /// of the two perpendicular directions with probability `slip` each.
    pub(crate) fn sample(self, slip: f64, rng: &mut dyn RngCore) -> Dir {
        if slip <= 0.0 {
            return self;
        }
        let u: f64 = rng.gen();
        let [left, right] = self.perpendicular();
        if u < slip {
            left
        } else if u < 2.0 * slip {
            right
        } else {
            self
        }
    }
}

/// Serializable recipe for building an environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvSpec {
    Wumpus {
        size: usize,
        #[serde(default)]
        layout_seed: u64,
        #[serde(default = "default_slip")]
        slip: f64,
        /// Start on a random open cell instead of the north-west corner.
        #[serde(default)]
        random_start: bool,
    },
    /// The 4x4 grid with a pit at (2,2) and the goal at (4,4), rewards
    /// +10 / -10 / -1, deterministic moves. Starts on a random open cell
    /// unless `random_start` is false.
    WumpusExample {
        #[serde(default = "default_true")]
        random_start: bool,
    },
    Office {
        size: usize,
        #[serde(default = "default_slip")]
        slip: f64,
        #[serde(default = "default_office_reward")]
        reward: f64,
    },
    Taxi {
        size: usize,
        #[serde(default = "default_slip")]
        slip: f64,
    },
    Water,
}

fn default_slip() -> f64 {
    0.1
}

fn default_true() -> bool {
    true
}

fn default_office_reward() -> f64 {
    1000.0
}

impl EnvSpec {
    pub fn by_name(name: &str, size: usize) -> Result<Self, EnvError> {
        match name {
            "wumpus" => Ok(EnvSpec::Wumpus {
                size,
                layout_seed: 0,
                slip: default_slip(),
                random_start: false,
            }),
            "wumpus_example" => Ok(EnvSpec::WumpusExample { random_start: true }),
            "office" => Ok(EnvSpec::Office {
                size,
                slip: default_slip(),
                reward: default_office_reward(),
            }),
            "taxi" => Ok(EnvSpec::Taxi {
                size,
                slip: default_slip(),
            }),
            "water" => Ok(EnvSpec::Water),
            other => Err(EnvError::InvalidConfig(format!("unknown environment `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EnvSpec::Wumpus { .. } => "wumpus",
            EnvSpec::WumpusExample { .. } => "wumpus_example",
            EnvSpec::Office { .. } => "office",
            EnvSpec::Taxi { .. } => "taxi",
            EnvSpec::Water => "water",
        }
    }

    /// Replaces the grid size, for environments that have one.
    pub fn with_size(self, new_size: usize) -> Self {
        match self {
            EnvSpec::Wumpus {
                layout_seed,
                slip,
                random_start,
                ..
            } => EnvSpec::Wumpus {
                size: new_size,
                layout_seed,
                slip,
                random_start,
            },
            EnvSpec::Office { slip, reward, .. } => EnvSpec::Office {
                size: new_size,
                slip,
                reward,
            },
            EnvSpec::Taxi { slip, .. } => EnvSpec::Taxi { size: new_size, slip },
            other => other,
        }
    }

    pub fn build(&self) -> Result<Box<dyn Environment + Send>, EnvError> {
        Ok(match *self {
            EnvSpec::Wumpus {
                size,
                layout_seed,
                slip,
                random_start,
            } => {
                let world = WumpusWorld::generated(size, layout_seed, slip)?;
                Box::new(if random_start { world.with_random_start() } else { world })
            }
            EnvSpec::WumpusExample { random_start } => {
                let world = WumpusWorld::example_4x4();
                Box::new(if random_start { world.with_random_start() } else { world })
            }
            EnvSpec::Office { size, slip, reward } => Box::new(OfficeWorld::new(size, slip, reward)?),
            EnvSpec::Taxi { size, slip } => Box::new(TaxiWorld::new(size, slip)?),
            EnvSpec::Water => Box::new(WaterWorld::new()),
        })
    }
}

pub(crate) fn check_slip(slip: f64) -> Result<(), EnvError> {
    if (0.0..0.5).contains(&slip) {
        Ok(())
    } else {
        Err(EnvError::InvalidConfig(format!("slip must lie in [0, 0.5), got {slip}")))
    }
}
