use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_slip, ActionId, Dir, EnvDescriptor, EnvError, Environment, State, StepResult};
use crate::cat::VariableSpec;

const OBSTACLE_DENSITY: f64 = 0.08;
const PIT_DENSITY: f64 = 0.04;
const MAX_LAYOUT_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Open,
    Obstacle,
    Pit,
    Goal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WumpusRewards {
    pub step: f64,
    pub bump: f64,
    pub pit: f64,
    pub goal: f64,
}

impl Default for WumpusRewards {
    fn default() -> Self {
        Self {
            step: -1.0,
            bump: -2.0,
            pit: -1000.0,
            goal: 500.0,
        }
    }
}

/// Square grid of cells plus a start position. Coordinates are 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct WumpusLayout {
    size: usize,
    cells: Vec<Cell>,
    start: (i64, i64),
}

impl WumpusLayout {
    /// Parses rows of `.` (open), `#` (obstacle), `P` (pit), `G` (goal) and
    /// `S` (open start cell). The first row is the northern one.
    pub fn from_rows(rows: &[&str]) -> Result<Self, EnvError> {
        let size = rows.len();
        if size == 0 || rows.iter().any(|r| r.chars().count() != size) {
            return Err(EnvError::InvalidConfig("layout must be a non-empty square".into()));
        }
        let mut cells = Vec::with_capacity(size * size);
        let mut start = None;
        for (y, row) in rows.iter().enumerate() {
            for (x, ch) in row.chars().enumerate() {
                cells.push(match ch {
                    '.' => Cell::Open,
                    '#' => Cell::Obstacle,
                    'P' => Cell::Pit,
                    'G' => Cell::Goal,
                    'S' => {
                        start = Some((x as i64 + 1, y as i64 + 1));
                        Cell::Open
                    }
                    other => return Err(EnvError::InvalidConfig(format!("unknown layout symbol `{other}`"))),
                });
            }
        }
        let start = start.ok_or_else(|| EnvError::InvalidConfig("layout has no start cell".into()))?;
        Ok(Self { size, cells, start })
    }

    /// Random layout with 8% obstacles and 4% pits, start in the north-west
    /// corner and goal in the south-east corner. Layouts where the goal is
    /// unreachable from the start are redrawn.
    pub fn generate(size: usize, seed: u64) -> Result<Self, EnvError> {
        if size < 4 {
            return Err(EnvError::InvalidConfig(format!("wumpus size must be at least 4, got {size}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let total = size * size;
        let n_obstacles = (OBSTACLE_DENSITY * total as f64).round() as usize;
        let n_pits = (PIT_DENSITY * total as f64).round() as usize;
        let start_idx = 0;
        let goal_idx = total - 1;
        let candidates: Vec<usize> = (0..total).filter(|&i| i != start_idx && i != goal_idx).collect();
        for _ in 0..MAX_LAYOUT_ATTEMPTS {
            let mut cells = vec![Cell::Open; total];
            cells[goal_idx] = Cell::Goal;
            let picks: Vec<usize> = candidates.choose_multiple(&mut rng, n_obstacles + n_pits).copied().collect();
            for (k, idx) in picks.into_iter().enumerate() {
                cells[idx] = if k < n_obstacles { Cell::Obstacle } else { Cell::Pit };
            }
            let layout = Self {
                size,
                cells,
                start: (1, 1),
            };
            if layout.goal_reachable() {
                return Ok(layout);
            }
        }
        Err(EnvError::LayoutGeneration(MAX_LAYOUT_ATTEMPTS))
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn start(&self) -> (i64, i64) {
        self.start
    }

    pub fn cell(&self, x: i64, y: i64) -> Option<Cell> {
        let n = self.size as i64;
        if x < 1 || y < 1 || x > n || y > n {
            return None;
        }
        Some(self.cells[((y - 1) * n + (x - 1)) as usize])
    }

    fn goal_reachable(&self) -> bool {
        let n = self.size as i64;
        let mut seen = vec![false; self.cells.len()];
        let mut queue = VecDeque::from([self.start]);
        seen[((self.start.1 - 1) * n + self.start.0 - 1) as usize] = true;
        while let Some((x, y)) = queue.pop_front() {
            if self.cell(x, y) == Some(Cell::Goal) {
                return true;
            }
            for d in Dir::ALL {
                let (dx, dy) = d.delta();
                let (nx, ny) = (x + dx, y + dy);
                match self.cell(nx, ny) {
                    Some(Cell::Open) | Some(Cell::Goal) => {
                        let idx = ((ny - 1) * n + nx - 1) as usize;
                        if !seen[idx] {
                            seen[idx] = true;
                            queue.push_back((nx, ny));
                        }
                    }
                    _ => {}
                }
            }
        }
        false
    }
}

/// Grid navigation with obstacles, pits and slippery moves.
///
/// Moving into an obstacle or the outer wall leaves the agent in place with
/// the bump reward. Entering a pit or the goal ends the episode.
#[derive(Debug, Clone)]
pub struct WumpusWorld {
    layout: WumpusLayout,
    rewards: WumpusRewards,
    slip: f64,
    /// Open cells episodes may start from; only the layout start if empty.
    start_cells: Vec<(i64, i64)>,
    pos: (i64, i64),
    done: bool,
    state: State,
    descriptor: EnvDescriptor,
}

impl WumpusWorld {
    pub fn new(layout: WumpusLayout, rewards: WumpusRewards, slip: f64) -> Result<Self, EnvError> {
        check_slip(slip)?;
        let n = layout.size as i64;
        let horizon = (1200 * layout.size / 64).max(50);
        let descriptor = EnvDescriptor::new(
            "wumpus",
            vec![VariableSpec::integer("x", 1, n), VariableSpec::integer("y", 1, n)],
            &Dir::NAMES,
            horizon,
        );
        let pos = layout.start;
        Ok(Self {
            layout,
            rewards,
            slip,
            start_cells: Vec::new(),
            pos,
            done: false,
            state: vec![pos.0 as f64, pos.1 as f64],
            descriptor,
        })
    }

    /// Seeded random layout with the default reward scheme.
    pub fn generated(size: usize, layout_seed: u64, slip: f64) -> Result<Self, EnvError> {
        Self::new(WumpusLayout::generate(size, layout_seed)?, WumpusRewards::default(), slip)
    }

    /// Starts every episode on an open cell drawn uniformly at random
    /// instead of the layout's start cell.
    pub fn with_random_start(mut self) -> Self {
        let n = self.layout.size as i64;
        self.start_cells = (1..=n)
            .flat_map(|y| (1..=n).map(move |x| (x, y)))
            .filter(|&(x, y)| self.layout.cell(x, y) == Some(Cell::Open))
            .collect();
        self
    }

    pub fn has_random_start(&self) -> bool {
        !self.start_cells.is_empty()
    }

    /// 4x4 grid, pit at (2,2), goal at (4,4), start at (1,1); +10 goal,
    /// -10 pit, -1 for every move including bumps into the wall.
    pub fn example_4x4() -> Self {
        let layout = WumpusLayout::from_rows(&["S...", ".P..", "....", "...G"]).expect("static layout");
        let rewards = WumpusRewards {
            step: -1.0,
            bump: -1.0,
            pit: -10.0,
            goal: 10.0,
        };
        Self::new(layout, rewards, 0.0).expect("static layout")
    }

    pub fn layout(&self) -> &WumpusLayout {
        &self.layout
    }

    pub fn rewards(&self) -> WumpusRewards {
        self.rewards
    }

    pub fn slip(&self) -> f64 {
        self.slip
    }

    /// Places the agent on an open cell, for tests and analysis.
    pub fn set_position(&mut self, x: i64, y: i64) -> Result<(), EnvError> {
        match self.layout.cell(x, y) {
            Some(Cell::Open) => {
                self.pos = (x, y);
                self.state = vec![x as f64, y as f64];
                self.done = false;
                Ok(())
            }
            _ => Err(EnvError::InvalidConfig(format!("({x},{y}) is not an open cell"))),
        }
    }

    /// Deterministic effect of moving `dir` from `(x, y)`: next cell, reward,
    /// terminal flag and success flag.
    pub(crate) fn outcome(&self, (x, y): (i64, i64), dir: Dir) -> ((i64, i64), f64, bool, bool) {
        let (dx, dy) = dir.delta();
        let target = (x + dx, y + dy);
        match self.layout.cell(target.0, target.1) {
            None | Some(Cell::Obstacle) => ((x, y), self.rewards.bump, false, false),
            Some(Cell::Pit) => (target, self.rewards.pit, true, false),
            Some(Cell::Goal) => (target, self.rewards.goal, true, true),
            Some(Cell::Open) => (target, self.rewards.step, false, false),
        }
    }
}

impl Environment for WumpusWorld {
    fn descriptor(&self) -> &EnvDescriptor {
        &self.descriptor
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> State {
        self.pos = if self.start_cells.is_empty() {
            self.layout.start
        } else {
            self.start_cells[rng.gen_range(0..self.start_cells.len())]
        };
        self.done = false;
        self.state = vec![self.pos.0 as f64, self.pos.1 as f64];
        self.state.clone()
    }

    fn step(&mut self, action: ActionId, rng: &mut dyn RngCore) -> Result<StepResult, EnvError> {
        let dir = Dir::from_action(action.0).ok_or(EnvError::InvalidAction(action.0))?;
        if self.done {
            return Err(EnvError::EpisodeOver);
        }
        let actual = dir.sample(self.slip, rng);
        let (pos, reward, done, success) = self.outcome(self.pos, actual);
        self.pos = pos;
        self.done = done;
        self.state = vec![pos.0 as f64, pos.1 as f64];
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
