use rand::{Rng, RngCore};

use crate::cat::NodeId;
use crate::envs::ActionId;
use crate::Scalar;

/// Q-values keyed by (tree node, action). Unseen pairs read as zero.
///
/// Rows are stored densely by node id; node ids are stable arena indices, so
/// rows of refined (inner) nodes simply stay behind.
#[derive(Debug, Clone, PartialEq)]
pub struct AbstractQTable<F: Scalar> {
    num_actions: usize,
    rows: Vec<Vec<F>>,
}

impl<F: Scalar> AbstractQTable<F> {
    pub fn new(num_actions: usize) -> Self {
        Self {
            num_actions,
            rows: Vec::new(),
        }
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn get(&self, node: NodeId, action: ActionId) -> F {
        self.rows.get(node.0).and_then(|r| r.get(action.0)).copied().unwrap_or_else(F::zero)
    }

    fn row_mut(&mut self, node: NodeId) -> &mut Vec<F> {
        if self.rows.len() <= node.0 {
            self.rows.resize_with(node.0 + 1, Vec::new);
        }
        let row = &mut self.rows[node.0];
        if row.is_empty() {
            row.resize(self.num_actions, F::zero());
        }
        row
    }

    pub fn set(&mut self, node: NodeId, action: ActionId, value: F) {
        self.row_mut(node)[action.0] = value;
    }

    /// All action values for `node`, zeros if never written.
    pub fn row(&self, node: NodeId) -> Vec<F> {
        (0..self.num_actions).map(|a| self.get(node, ActionId(a))).collect()
    }

    pub fn max_value(&self, node: NodeId) -> F {
        (0..self.num_actions)
            .map(|a| self.get(node, ActionId(a)))
            .fold(F::neg_infinity(), F::max)
    }

    /// Highest-valued action; ties go to the lowest action id.
    pub fn greedy(&self, node: NodeId) -> ActionId {
        let mut best = ActionId(0);
        let mut best_v = self.get(node, best);
        for a in 1..self.num_actions {
            let v = self.get(node, ActionId(a));
            if v > best_v {
                best = ActionId(a);
                best_v = v;
            }
        }
        best
    }

    /// Copies `from`'s row onto `to`.
    pub fn copy_row(&mut self, from: NodeId, to: NodeId) {
        let row = self.row(from);
        *self.row_mut(to) = row;
    }

    /// Nodes with a stored row.
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.rows.iter().enumerate().filter(|(_, r)| !r.is_empty()).map(|(i, _)| NodeId(i))
    }
}

/// Epsilon-greedy choice over `num_actions` actions.
pub fn select_action<F: Scalar>(q: &AbstractQTable<F>, leaf: NodeId, num_actions: usize, epsilon: f64, rng: &mut dyn RngCore) -> ActionId {
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        ActionId(rng.gen_range(0..num_actions))
    } else {
        q.greedy(leaf)
    }
}

/// Semi-Markov Q-learning update for an action that lasted `k` primitive
/// steps and earned the discounted reward `r_bar`:
/// `Q <- (1 - alpha) Q + alpha (r_bar + gamma^k max Q(next))`, with no
/// bootstrap on terminal transitions.
#[allow(clippy::too_many_arguments)]
pub fn q_update<F: Scalar>(
    q: &mut AbstractQTable<F>,
    leaf: NodeId,
    action: ActionId,
    r_bar: F,
    k: usize,
    next_leaf: NodeId,
    done: bool,
    alpha: F,
    gamma: F,
) {
    let target = if done {
        r_bar
    } else {
        r_bar + gamma.powi(k as i32) * q.max_value(next_leaf)
    };
    let old = q.get(leaf, action);
    q.set(leaf, action, (F::one() - alpha) * old + alpha * target);
}
