use rand::RngCore;

use super::{check_slip, ActionId, Dir, EnvDescriptor, EnvError, Environment, State, StepResult};
use crate::cat::VariableSpec;

/// Fixed four-room geometry.
///
/// The `size x size` grid is cut into rooms A (north-west), B (north-east),
/// C (south-west) and D (south-east) by thin walls between columns `h` and
/// `h + 1` and between rows `h` and `h + 1`, where `h = size / 2`. Each of the
/// four wall segments has a single-cell doorway at its midpoint. Coffee sits
/// in A's north-west corner, mail in B's north-east corner, the office at
/// the centre of D, and the agent starts at the centre of C.
#[derive(Debug, Clone, PartialEq)]
pub struct OfficeLayout {
    pub size: i64,
    pub coffee: (i64, i64),
    pub mail: (i64, i64),
    pub office: (i64, i64),
    pub start: (i64, i64),
}

impl OfficeLayout {
    pub fn new(size: usize) -> Result<Self, EnvError> {
        if size < 4 || !size.is_multiple_of(2) {
            return Err(EnvError::InvalidConfig(format!(
                "office size must be even and at least 4, got {size}"
            )));
        }
        let n = size as i64;
        let h = n / 2;
        let mid = (h + 1) / 2;
        Ok(Self {
            size: n,
            coffee: (1, 1),
            mail: (n, 1),
            office: (h + mid, h + mid),
            start: (mid, h + mid),
        })
    }

    fn half(&self) -> i64 {
        self.size / 2
    }

    fn door_offset(&self) -> i64 {
        (self.half() + 1) / 2
    }

    /// True if a wall or the grid edge prevents moving `dir` from `(x, y)`.
    pub(crate) fn blocked(&self, (x, y): (i64, i64), dir: Dir) -> bool {
        let (dx, dy) = dir.delta();
        let (nx, ny) = (x + dx, y + dy);
        if nx < 1 || ny < 1 || nx > self.size || ny > self.size {
            return true;
        }
        let h = self.half();
        let mid = self.door_offset();
        if dx != 0 && x.min(nx) == h {
            // crossing the vertical wall
            let door = if y <= h { mid } else { h + mid };
            return y != door;
        }
        if dy != 0 && y.min(ny) == h {
            let door = if x <= h { mid } else { h + mid };
            return x != door;
        }
        false
    }
}

/// Collect coffee and mail, then deliver both to the office.
///
/// Items are picked up automatically on entering their cell. Reaching the
/// office holding both pays `reward` and ends the episode; every other
/// transition pays zero.
#[derive(Debug, Clone)]
pub struct OfficeWorld {
    layout: OfficeLayout,
    slip: f64,
    reward: f64,
    pos: (i64, i64),
    has_coffee: bool,
    has_mail: bool,
    done: bool,
    state: State,
    descriptor: EnvDescriptor,
}

impl OfficeWorld {
    pub fn new(size: usize, slip: f64, reward: f64) -> Result<Self, EnvError> {
        check_slip(slip)?;
        let layout = OfficeLayout::new(size)?;
        let n = layout.size;
        let descriptor = EnvDescriptor::new(
            "office",
            vec![
                VariableSpec::integer("x", 1, n),
                VariableSpec::integer("y", 1, n),
                VariableSpec::integer("has_coffee", 0, 1),
                VariableSpec::integer("has_mail", 0, 1),
            ],
            &Dir::NAMES,
            (1000 * size / 36).max(50),
        );
        let mut world = Self {
            pos: layout.start,
            layout,
            slip,
            reward,
            has_coffee: false,
            has_mail: false,
            done: false,
            state: Vec::new(),
            descriptor,
        };
        world.sync_state();
        Ok(world)
    }

    pub fn layout(&self) -> &OfficeLayout {
        &self.layout
    }

    /// Overrides the full state, for tests.
    pub fn set_state(&mut self, x: i64, y: i64, has_coffee: bool, has_mail: bool) {
        self.pos = (x, y);
        self.has_coffee = has_coffee;
        self.has_mail = has_mail;
        self.done = false;
        self.sync_state();
    }

    fn sync_state(&mut self) {
        self.state = vec![
            self.pos.0 as f64,
            self.pos.1 as f64,
            f64::from(u8::from(self.has_coffee)),
            f64::from(u8::from(self.has_mail)),
        ];
    }
}

impl Environment for OfficeWorld {
    fn descriptor(&self) -> &EnvDescriptor {
        &self.descriptor
    }

    fn reset(&mut self, _rng: &mut dyn RngCore) -> State {
        self.pos = self.layout.start;
        self.has_coffee = false;
        self.has_mail = false;
        self.done = false;
        self.sync_state();
        self.state.clone()
    }

    fn step(&mut self, action: ActionId, rng: &mut dyn RngCore) -> Result<StepResult, EnvError> {
        let dir = Dir::from_action(action.0).ok_or(EnvError::InvalidAction(action.0))?;
        if self.done {
            return Err(EnvError::EpisodeOver);
        }
        let actual = dir.sample(self.slip, rng);
        if !self.layout.blocked(self.pos, actual) {
            let (dx, dy) = actual.delta();
            self.pos = (self.pos.0 + dx, self.pos.1 + dy);
        }
        if self.pos == self.layout.coffee {
            self.has_coffee = true;
        }
        if self.pos == self.layout.mail {
            self.has_mail = true;
        }
        let success = self.pos == self.layout.office && self.has_coffee && self.has_mail;
        self.done = success;
        self.sync_state();
        Ok(StepResult {
            next_state: self.state.clone(),
            reward: if success { self.reward } else { 0.0 },
            done: success,
            success,
        })
    }

    fn state(&self) -> &[f64] {
        &self.state
    }
}
