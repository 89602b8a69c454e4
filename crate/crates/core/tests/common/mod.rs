//! Fixtures shared by the integration tests: small tabular MDPs with a
//! value-iteration oracle, a reward corridor, and random tree builders.
#![allow(dead_code)]

use darrl::agent::{AbstractQTable, AgentConfig};
use darrl::cat::{Cat, VariableSpec};
use darrl::envs::{ActionId, EnvDescriptor, EnvError, Environment, State, StepResult};
use rand::{Rng, RngCore};

pub mod checks;

/// One possible outcome of an action.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub prob: f64,
    pub next: usize,
    pub reward: f64,
    pub done: bool,
    pub success: bool,
}

/// Finite MDP over an explicit list of integer-valued states.
#[derive(Debug, Clone)]
pub struct TabularMdp {
    pub states: Vec<State>,
    pub terminal: Vec<bool>,
    /// `model[s][a]`: outcome distribution.
    pub model: Vec<Vec<Vec<Outcome>>>,
    pub start: usize,
    pub random_start: bool,
    pub gamma: f64,
    descriptor: EnvDescriptor,
    current: usize,
    done: bool,
}

impl TabularMdp {
    pub fn index(&self, state: &[f64]) -> usize {
        self.states.iter().position(|s| s.as_slice() == state).expect("known state")
    }

    pub fn num_actions(&self) -> usize {
        self.descriptor.actions.len()
    }

    /// Optimal action values by value iteration to a 1e-12 fixed point.
    pub fn optimal_q(&self) -> Vec<Vec<f64>> {
        let n = self.states.len();
        let mut v = vec![0.0; n];
        loop {
            let q = self.q_from(&v);
            let next: Vec<f64> = (0..n)
                .map(|s| {
                    if self.terminal[s] {
                        0.0
                    } else {
                        q[s].iter().copied().fold(f64::NEG_INFINITY, f64::max)
                    }
                })
                .collect();
            let delta = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            v = next;
            if delta < 1e-12 {
                return self.q_from(&v);
            }
        }
    }

    fn q_from(&self, v: &[f64]) -> Vec<Vec<f64>> {
        self.model
            .iter()
            .map(|actions| {
                actions
                    .iter()
                    .map(|outs| {
                        outs.iter()
                            .map(|o| o.prob * (o.reward + if o.done { 0.0 } else { self.gamma * v[o.next] }))
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }

    pub fn optimal_value(&self, s: usize) -> f64 {
        self.optimal_q()[s].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Actions within `tol` of the best value, per state.
    pub fn optimal_sets(&self, tol: f64) -> Vec<Vec<usize>> {
        self.optimal_q()
            .iter()
            .map(|row| {
                let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (0..row.len()).filter(|&a| row[a] >= best - tol).collect()
            })
            .collect()
    }

    /// Exact discounted value of `policy` from the fixed start, by iterative
    /// policy evaluation to a 1e-12 fixed point.
    pub fn policy_value(&self, policy: impl Fn(&[f64]) -> ActionId) -> f64 {
        let actions: Vec<usize> = self.states.iter().map(|s| policy(s).0).collect();
        let mut v = vec![0.0; self.states.len()];
        loop {
            let next: Vec<f64> = (0..v.len())
                .map(|s| {
                    if self.terminal[s] {
                        return 0.0;
                    }
                    self.model[s][actions[s]]
                        .iter()
                        .map(|o| o.prob * (o.reward + if o.done { 0.0 } else { self.gamma * v[o.next] }))
                        .sum()
                })
                .collect();
            let delta = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            v = next;
            if delta < 1e-12 {
                return v[self.start];
            }
        }
    }

    /// Mean discounted return of `policy` from the fixed start over `episodes`
    /// rollouts capped at `horizon` steps.
    pub fn policy_return(&mut self, policy: impl Fn(&[f64]) -> ActionId, episodes: usize, horizon: usize, rng: &mut dyn RngCore) -> f64 {
        let random_start = self.random_start;
        self.random_start = false;
        let mut total = 0.0;
        for _ in 0..episodes {
            let mut s = self.reset(rng);
            let mut discount = 1.0;
            for _ in 0..horizon {
                let r = self.step(policy(&s), rng).expect("valid action");
                total += discount * r.reward;
                discount *= self.gamma;
                if r.done {
                    break;
                }
                s = r.next_state;
            }
        }
        self.random_start = random_start;
        total / episodes as f64
    }
}

impl Environment for TabularMdp {
    fn descriptor(&self) -> &EnvDescriptor {
        &self.descriptor
    }

    fn reset(&mut self, rng: &mut dyn RngCore) -> State {
        self.current = if self.random_start {
            let live: Vec<usize> = (0..self.states.len()).filter(|&s| !self.terminal[s]).collect();
            live[rng.gen_range(0..live.len())]
        } else {
            self.start
        };
        self.done = false;
        self.states[self.current].clone()
    }

    fn step(&mut self, action: ActionId, rng: &mut dyn RngCore) -> Result<StepResult, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeOver);
        }
        let outs = self.model[self.current].get(action.0).ok_or(EnvError::InvalidAction(action.0))?;
        let mut u = rng.gen::<f64>();
        let mut pick = &outs[outs.len() - 1];
        for o in outs {
            if u < o.prob {
                pick = o;
                break;
            }
            u -= o.prob;
        }
        self.current = pick.next;
        self.done = pick.done;
        Ok(StepResult {
            next_state: self.states[pick.next].clone(),
            reward: pick.reward,
            done: pick.done,
            success: pick.success,
        })
    }

    fn state(&self) -> &[f64] {
        &self.states[self.current]
    }
}

const MOVES: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, -1), (0, 1)];

/// Grid cell kinds for [`grid_mdp`].
#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Open,
    Wall,
    Trap,
    Goal,
}

/// Grid MDP from rows of `.` (open), `#` (wall), `P` (trap, -10, terminal),
/// `G` (goal, +10, terminal) and `S` (start). Moves E, W, N, S cost -1; the
/// intended move happens with probability `1 - 2 slip`, each perpendicular
/// one with `slip`. Bumping leaves the agent in place.
pub fn grid_mdp(rows: &[&str], slip: f64, gamma: f64) -> TabularMdp {
    let h = rows.len() as i64;
    let w = rows[0].len() as i64;
    let kind = |x: i64, y: i64| -> Kind {
        if x < 1 || y < 1 || x > w || y > h {
            return Kind::Wall;
        }
        match rows[(y - 1) as usize].as_bytes()[(x - 1) as usize] {
            b'#' => Kind::Wall,
            b'P' => Kind::Trap,
            b'G' => Kind::Goal,
            _ => Kind::Open,
        }
    };
    let mut states = Vec::new();
    let mut start = 0;
    for y in 1..=h {
        for x in 1..=w {
            if kind(x, y) != Kind::Wall {
                if rows[(y - 1) as usize].as_bytes()[(x - 1) as usize] == b'S' {
                    start = states.len();
                }
                states.push(vec![x as f64, y as f64]);
            }
        }
    }
    let idx = |x: i64, y: i64| states.iter().position(|s| s[0] == x as f64 && s[1] == y as f64).unwrap();
    let terminal: Vec<bool> = states
        .iter()
        .map(|s| matches!(kind(s[0] as i64, s[1] as i64), Kind::Trap | Kind::Goal))
        .collect();
    let model = states
        .iter()
        .map(|s| {
            let (x, y) = (s[0] as i64, s[1] as i64);
            (0..4)
                .map(|a| {
                    let perp = if a < 2 { [2, 3] } else { [0, 1] };
                    let dirs = [(a, 1.0 - 2.0 * slip), (perp[0], slip), (perp[1], slip)];
                    dirs.iter()
                        .filter(|(_, p)| *p > 0.0)
                        .map(|&(d, prob)| {
                            let (tx, ty) = (x + MOVES[d].0, y + MOVES[d].1);
                            let (nx, ny) = if kind(tx, ty) == Kind::Wall { (x, y) } else { (tx, ty) };
                            let k = kind(nx, ny);
                            Outcome {
                                prob,
                                next: idx(nx, ny),
                                reward: match k {
                                    Kind::Trap => -10.0,
                                    Kind::Goal => 10.0,
                                    _ => -1.0,
                                },
                                done: matches!(k, Kind::Trap | Kind::Goal),
                                success: k == Kind::Goal,
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let descriptor = EnvDescriptor {
        name: "grid".into(),
        variable_specs: vec![VariableSpec::integer("x", 1, w), VariableSpec::integer("y", 1, h)],
        actions: ["E", "W", "N", "S"]
            .iter()
            .enumerate()
            .map(|(i, n)| darrl::envs::ActionSpec {
                id: ActionId(i),
                name: n.to_string(),
            })
            .collect(),
        horizon_hint: 100,
    };
    TabularMdp {
        states,
        terminal,
        model,
        start,
        random_start: true,
        gamma,
        descriptor,
        current: start,
        done: false,
    }
}

/// Two states A=0, B=1 on one variable. `advance` moves A to B (reward 0)
/// and from B ends the episode with +1; `back` returns to A with reward 0.
pub fn chain2(gamma: f64) -> TabularMdp {
    let o = |next, reward, done| Outcome {
        prob: 1.0,
        next,
        reward,
        done,
        success: done,
    };
    let model = vec![
        vec![vec![o(0, 0.0, false)], vec![o(1, 0.0, false)]],
        vec![vec![o(0, 0.0, false)], vec![o(1, 1.0, true)]],
    ];
    let descriptor = EnvDescriptor {
        name: "chain2".into(),
        variable_specs: vec![VariableSpec::integer("s", 0, 1)],
        actions: ["back", "advance"]
            .iter()
            .enumerate()
            .map(|(i, n)| darrl::envs::ActionSpec {
                id: ActionId(i),
                name: n.to_string(),
            })
            .collect(),
        horizon_hint: 20,
    };
    TabularMdp {
        states: vec![vec![0.0], vec![1.0]],
        terminal: vec![false, false],
        model,
        start: 0,
        random_start: true,
        gamma,
        descriptor,
        current: 0,
        done: false,
    }
}

/// Every fixture MDP used by the oracle checks, with a name.
pub fn fixtures() -> Vec<(&'static str, TabularMdp)> {
    vec![
        ("chain2", chain2(0.9)),
        ("corridor8", grid_mdp(&["S......G"], 0.0, 0.95)),
        ("example4x4", grid_mdp(&["S...", ".P..", "....", "...G"], 0.0, 0.95)),
        ("slippery5x5", grid_mdp(&[".....", ".#P..", "...#.", ".PS..", "....G"], 0.1, 0.95)),
        (
            "rooms6x7",
            grid_mdp(&["S..#...", "...#.P.", "......G", "...#...", "P..#...", "...#..."], 0.0, 0.95),
        ),
    ]
}

/// Config used to learn a fixture, discounting like the fixture itself.
pub fn fixture_config(mdp: &TabularMdp, n_epi: usize) -> AgentConfig {
    AgentConfig {
        n_epi,
        gamma: mdp.gamma,
        horizon: 100,
        epsilon_decay: 0.999,
        success_threshold: 1.0,
        n_check: 50,
        ..AgentConfig::default()
    }
}

/// Deterministic 1-D corridor of `rewards.len()` cells moving east, with a
/// terminal at the last cell. Entering cell `i` earns `rewards[i]`.
#[derive(Debug, Clone)]
pub struct RewardCorridor {
    pub rewards: Vec<f64>,
    pos: usize,
    state: State,
    descriptor: EnvDescriptor,
}

impl RewardCorridor {
    pub fn new(rewards: Vec<f64>) -> Self {
        let n = rewards.len() as i64;
        let descriptor = EnvDescriptor {
            name: "corridor".into(),
            variable_specs: vec![VariableSpec::integer("x", 0, n - 1)],
            actions: vec![darrl::envs::ActionSpec {
                id: ActionId(0),
                name: "E".into(),
            }],
            horizon_hint: rewards.len(),
        };
        Self {
            rewards,
            pos: 0,
            state: vec![0.0],
            descriptor,
        }
    }

    pub fn place(&mut self, pos: usize) {
        self.pos = pos;
        self.state = vec![pos as f64];
    }
}

impl Environment for RewardCorridor {
    fn descriptor(&self) -> &EnvDescriptor {
        &self.descriptor
    }

    fn reset(&mut self, _rng: &mut dyn RngCore) -> State {
        self.place(0);
        self.state.clone()
    }

    fn step(&mut self, _action: ActionId, _rng: &mut dyn RngCore) -> Result<StepResult, EnvError> {
        let next = self.pos + 1;
        self.place(next);
        let done = next + 1 == self.rewards.len();
        Ok(StepResult {
            next_state: self.state.clone(),
            reward: self.rewards[next],
            done,
            success: done,
        })
    }

    fn state(&self) -> &[f64] {
        &self.state
    }
}

/// Random integer specs whose grid has at most `max_cells` cells.
pub fn random_integer_specs(rng: &mut impl Rng, max_cells: u64) -> Vec<VariableSpec> {
    let dims = rng.gen_range(1..=3);
    let per = (max_cells as f64).powf(1.0 / dims as f64).floor() as i64;
    (0..dims)
        .map(|i| {
            let lo = rng.gen_range(-5..5);
            let width = rng.gen_range(1..=per.max(1));
            VariableSpec::integer(format!("v{i}"), lo, lo + width - 1)
        })
        .collect()
}

/// Random specs mixing integer and real variables.
pub fn random_mixed_specs(rng: &mut impl Rng) -> Vec<VariableSpec> {
    let dims = rng.gen_range(1..=4);
    (0..dims)
        .map(|i| {
            if rng.gen_bool(0.5) {
                let lo = rng.gen_range(-10..10);
                VariableSpec::integer(format!("i{i}"), lo, lo + rng.gen_range(0..30))
            } else {
                let lo = rng.gen_range(-50.0..50.0);
                VariableSpec::real(format!("r{i}"), lo, lo + rng.gen_range(2.0..100.0))
            }
        })
        .collect()
}

/// Applies up to `n` random refinements (random leaf, variable and factor),
/// calling `each(pre, post, children)` after every one.
pub fn random_refinements(cat: &mut Cat, rng: &mut impl Rng, n: usize, mut each: impl FnMut(&Cat, &Cat, &[darrl::NodeId])) {
    for _ in 0..n {
        let f = rng.gen_range(2..=3);
        let candidates: Vec<_> = cat
            .leaves()
            .iter()
            .copied()
            .filter(|&l| !cat.splittable_vars(l, f).is_empty())
            .collect();
        if candidates.is_empty() {
            return;
        }
        let leaf = candidates[rng.gen_range(0..candidates.len())];
        let vars = cat.splittable_vars(leaf, f);
        let var = vars[rng.gen_range(0..vars.len())];
        let pre = cat.clone();
        let children = cat.refine_leaf(leaf, var, f).expect("splittable");
        each(&pre, cat, &children);
    }
}

/// Uniform random point inside the root box.
pub fn random_state(cat: &Cat, rng: &mut impl Rng) -> Vec<f64> {
    cat.specs()
        .iter()
        .map(|s| match s.kind {
            darrl::VarKind::Integer => rng.gen_range(s.lo as i64..=s.hi as i64) as f64,
            darrl::VarKind::Real => {
                if rng.gen_bool(0.05) {
                    s.hi
                } else {
                    rng.gen_range(s.lo..s.hi)
                }
            }
        })
        .collect()
}

/// Leaf found by scanning every leaf's box.
pub fn linear_scan(cat: &Cat, state: &[f64]) -> Vec<darrl::NodeId> {
    cat.leaf_abstractions()
        .filter(|(_, a)| a.contains(state, cat.specs()))
        .map(|(id, _)| id)
        .collect()
}

/// Greedy action of `q` at the leaf containing `state`.
pub fn lifted_greedy<'a>(cat: &'a Cat, q: &'a AbstractQTable<f64>) -> impl Fn(&[f64]) -> ActionId + 'a {
    move |s| q.greedy(cat.find_abstract(s).expect("state inside the tree"))
}
