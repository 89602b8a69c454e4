use rand::{Rng, RngCore};

use super::{check_slip, ActionId, Dir, EnvDescriptor, EnvError, Environment, State, StepResult};
use crate::cat::VariableSpec;

/// `passenger_loc` value meaning the passenger is in the taxi.
pub const TAXI_IN_CAR: i64 = 4;

const PICKUP: usize = 4;
const DROPOFF: usize = 5;
const MOVE_REWARD: f64 = -1.0;
const ILLEGAL_REWARD: f64 = -100.0;
const DELIVERY_REWARD: f64 = 500.0;

/// Single-passenger taxi on an open grid.
///
/// The four stands are the corners, indexed 0 = north-west, 1 = north-east,
/// 2 = south-west, 3 = south-east. Each episode draws a random taxi cell and
/// distinct passenger and destination stands. Moves slip like the other grid
/// worlds and cost -1 (a legal pick-up also costs -1). Pick-up or drop-off in
/// the wrong place costs -100 and leaves the state unchanged. Dropping the
/// passenger at the destination pays +500 and ends the episode.
#[derive(Debug, Clone)]
pub struct TaxiWorld {
    size: i64,
    slip: f64,
    taxi: (i64, i64),
    passenger: i64,
    destination: i64,
    done: bool,
    state: State,
    descriptor: EnvDescriptor,
}

impl TaxiWorld {
    pub fn new(size: usize, slip: f64) -> Result<Self, EnvError> {
        if size < 5 {
            return Err(EnvError::InvalidConfig(format!("taxi size must be at least 5, got {size}")));
        }
        check_slip(slip)?;
        let n = size as i64;
        let descriptor = EnvDescriptor::new(
            "taxi",
            vec![
                VariableSpec::integer("taxi_x", 1, n),
                VariableSpec::integer("taxi_y", 1, n),
                VariableSpec::integer("passenger_loc", 0, TAXI_IN_CAR),
                VariableSpec::integer("destination", 0, 3),
            ],
            &["E", "W", "N", "S", "Pickup", "Dropoff"],
            (1500 * size / 30).max(100),
        );
        let mut world = Self {
            size: n,
            slip,
            taxi: (1, 1),
            passenger: 0,
            destination: 1,
            done: false,
            state: Vec::new(),
            descriptor,
        };
        world.sync_state();
        Ok(world)
    }

    pub fn stand(&self, idx: i64) -> (i64, i64) {
        let n = self.size;
        match idx {
            0 => (1, 1),
            1 => (n, 1),
            2 => (1, n),
            _ => (n, n),
        }
    }

    /// Overrides the full state, for tests.
    pub fn set_state(&mut self, x: i64, y: i64, passenger: i64, destination: i64) {
        self.taxi = (x, y);
        self.passenger = passenger;
        self.destination = destination;
        self.done = false;
        self.sync_state();
    }

    fn sync_state(&mut self) {
        self.state = vec![
            self.taxi.0 as f64,
            self.taxi.1 as f64,
            self.passenger as f64,
            self.destination as f64,
        ];
    }
}

impl Environment for TaxiWorld {
    fn descriptor(&self) -> &EnvDescriptor {
        &self.descriptor
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> State {
        self.taxi = (rng.gen_range(1..=self.size), rng.gen_range(1..=self.size));
        self.passenger = rng.gen_range(0..4);
        self.destination = (self.passenger + rng.gen_range(1..4)) % 4;
        self.done = false;
        self.sync_state();
        self.state.clone()
    }

    fn step(&mut self, action: ActionId, rng: &mut dyn RngCore) -> Result<StepResult, EnvError> {
        if action.0 > DROPOFF {
            return Err(EnvError::InvalidAction(action.0));
        }
        if self.done {
            return Err(EnvError::EpisodeOver);
        }
        let mut reward = MOVE_REWARD;
        let mut success = false;
        match action.0 {
            PICKUP => {
                if self.passenger != TAXI_IN_CAR && self.taxi == self.stand(self.passenger) {
                    self.passenger = TAXI_IN_CAR;
                } else {
                    reward = ILLEGAL_REWARD;
                }
            }
            DROPOFF => {
                if self.passenger == TAXI_IN_CAR && self.taxi == self.stand(self.destination) {
                    self.passenger = self.destination;
                    reward = DELIVERY_REWARD;
                    success = true;
                } else {
                    reward = ILLEGAL_REWARD;
                }
            }
            a => {
                let dir = Dir::from_action(a).expect("move action").sample(self.slip, rng);
                let (dx, dy) = dir.delta();
                let (nx, ny) = (self.taxi.0 + dx, self.taxi.1 + dy);
                if (1..=self.size).contains(&nx) && (1..=self.size).contains(&ny) {
                    self.taxi = (nx, ny);
                }
            }
        }
        self.done = success;
        self.sync_state();
        Ok(StepResult {
            next_state: self.state.clone(),
            reward,
            done: success,
            success,
        })
    }

    fn state(&self) -> &[f64] {
        &self.state
    }
}
