use std::f64::consts::TAU;

use rand::{Rng, RngCore};

use super::{ActionId, Dir, EnvDescriptor, EnvError, Environment, State, StepResult};
use crate::cat::VariableSpec;

pub const WATER_SIZE: f64 = 300.0;
pub const WATER_BALL_RADIUS: f64 = 10.0;
pub const WATER_BALL_SPEED: f64 = 4.0;
pub const WATER_AGENT_SPEED: f64 = 6.0;
const COLLISION_REWARD: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

impl Ball {
    /// Advances one step, reflecting off the box walls.
    pub fn advance(&mut self) {
        (self.x, self.vx) = reflect(self.x + self.vx, self.vx);
        (self.y, self.vy) = reflect(self.y + self.vy, self.vy);
    }

    fn distance_to(&self, x: f64, y: f64) -> f64 {
        (self.x - x).hypot(self.y - y)
    }
}

fn reflect(pos: f64, vel: f64) -> (f64, f64) {
    if pos < 0.0 {
        (-pos, -vel)
    } else if pos > WATER_SIZE {
        (2.0 * WATER_SIZE - pos, -vel)
    } else {
        (pos, vel)
    }
}

/// Continuous box with one green and one red ball drifting at constant speed.
///
/// State is `(agent_x, agent_y, green_x, green_y, red_x, red_y)`. The agent
/// moves 6 units per step in the chosen compass direction and is clamped to
/// the box. Touching the green ball (centre distance below two radii) pays
/// +1000, the red ball -1000; either ends the episode.
#[derive(Debug, Clone)]
pub struct WaterWorld {
    agent: (f64, f64),
    green: Ball,
    red: Ball,
    done: bool,
    state: State,
    descriptor: EnvDescriptor,
}

impl Default for WaterWorld {
    fn default() -> Self {
        Self::new()
    }
}

impl WaterWorld {
    pub fn new() -> Self {
        let specs = ["agent_x", "agent_y", "green_x", "green_y", "red_x", "red_y"]
            .iter()
            .map(|n| VariableSpec::real(*n, 0.0, WATER_SIZE))
            .collect();
        let still = Ball {
            x: WATER_SIZE / 2.0,
            y: WATER_SIZE / 2.0,
            vx: 0.0,
            vy: 0.0,
        };
        let mut world = Self {
            agent: (WATER_SIZE / 2.0, WATER_SIZE / 2.0),
            green: still,
            red: still,
            done: false,
            state: Vec::new(),
            descriptor: EnvDescriptor::new("water", specs, &Dir::NAMES, 100),
        };
        world.sync_state();
        world
    }

    /// Overrides positions and velocities, for tests.
    pub fn set_scene(&mut self, agent: (f64, f64), green: Ball, red: Ball) {
        self.agent = agent;
        self.green = green;
        self.red = red;
        self.done = false;
        self.sync_state();
    }

    pub fn green(&self) -> Ball {
        self.green
    }

    pub fn red(&self) -> Ball {
        self.red
    }

    fn sync_state(&mut self) {
        self.state = vec![self.agent.0, self.agent.1, self.green.x, self.green.y, self.red.x, self.red.y];
    }

    fn random_ball(rng: &mut dyn RngCore, at: (f64, f64)) -> Ball {
        let angle = rng.gen_range(0.0..TAU);
        Ball {
            x: at.0,
            y: at.1,
            vx: WATER_BALL_SPEED * angle.cos(),
            vy: WATER_BALL_SPEED * angle.sin(),
        }
    }
}

impl Environment for WaterWorld {
    fn descriptor(&self) -> &EnvDescriptor {
        &self.descriptor
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> State {
        let lo = WATER_BALL_RADIUS;
        let hi = WATER_SIZE - WATER_BALL_RADIUS;
        let min_gap = 4.0 * WATER_BALL_RADIUS;
        loop {
            let pts: Vec<(f64, f64)> = (0..3).map(|_| (rng.gen_range(lo..hi), rng.gen_range(lo..hi))).collect();
            let apart = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).hypot(a.1 - b.1) >= min_gap;
            if apart(pts[0], pts[1]) && apart(pts[0], pts[2]) && apart(pts[1], pts[2]) {
                self.agent = pts[0];
                self.green = Self::random_ball(rng, pts[1]);
                self.red = Self::random_ball(rng, pts[2]);
                break;
            }
        }
        self.done = false;
        self.sync_state();
        self.state.clone()
    }

    fn step(&mut self, action: ActionId, _rng: &mut dyn RngCore) -> Result<StepResult, EnvError> {
        let dir = Dir::from_action(action.0).ok_or(EnvError::InvalidAction(action.0))?;
        if self.done {
            return Err(EnvError::EpisodeOver);
        }
        let (dx, dy) = dir.delta();
        self.agent = (
            (self.agent.0 + dx as f64 * WATER_AGENT_SPEED).clamp(0.0, WATER_SIZE),
            (self.agent.1 + dy as f64 * WATER_AGENT_SPEED).clamp(0.0, WATER_SIZE),
        );
        self.green.advance();
        self.red.advance();
        let touch = 2.0 * WATER_BALL_RADIUS;
        let (reward, done, success) = if self.red.distance_to(self.agent.0, self.agent.1) < touch {
            (-COLLISION_REWARD, true, false)
        } else if self.green.distance_to(self.agent.0, self.agent.1) < touch {
            (COLLISION_REWARD, true, true)
        } else {
            (0.0, false, false)
        };
        self.done = done;
        self.sync_state();
        Ok(StepResult {
            next_state: self.state.clone(),
            reward,
            done,
            success,
        })
    }

    fn state(&self) -> &[f64] {
        &self.state
    }
}
