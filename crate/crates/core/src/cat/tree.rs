use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{f_split, is_direct_refinement, is_refinement, Abstraction, CatError, VarKind, VariableSpec};

/// Smallest width a real interval may be split down to, per part.
pub const DEFAULT_MIN_REAL_WIDTH: f64 = 1.0;

/// Stable arena index of a tree node. Ids are never reused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl std::fmt::Display for NodeId {
    fn fmt(&self, out: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(out, "n{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatNode {
    pub id: NodeId,
    pub abstraction: Abstraction,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    pub split_var: Option<usize>,
    pub split_factor: Option<usize>,
}

impl CatNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Outcome of comparing two trees leaf by leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fineness {
    StrictlyFiner,
    Finer,
    NotFiner,
}

/// Conditional abstraction tree. The leaves are the abstract states.
#[derive(Debug, Clone, PartialEq)]
pub struct Cat {
    nodes: Vec<CatNode>,
    root: NodeId,
    leaves: BTreeSet<NodeId>,
    specs: Vec<VariableSpec>,
    min_real_width: f64,
}

impl Cat {
    /// Single-node tree whose root spans every variable's full range.
    pub fn new(specs: Vec<VariableSpec>) -> Result<Self, CatError> {
        Self::with_min_real_width(specs, DEFAULT_MIN_REAL_WIDTH)
    }

    pub fn with_min_real_width(specs: Vec<VariableSpec>, min_real_width: f64) -> Result<Self, CatError> {
        if specs.is_empty() {
            return Err(CatError::EmptySpecs);
        }
        for spec in &specs {
            spec.validate()?;
        }
        if !(min_real_width > 0.0 && min_real_width.is_finite()) {
            return Err(CatError::Malformed(format!(
                "min_real_width must be positive, got {min_real_width}"
            )));
        }
        let root = CatNode {
            id: NodeId(0),
            abstraction: Abstraction::initial(&specs),
            parent: None,
            children: Vec::new(),
            split_var: None,
            split_factor: None,
        };
        Ok(Self {
            nodes: vec![root],
            root: NodeId(0),
            leaves: BTreeSet::from([NodeId(0)]),
            specs,
            min_real_width,
        })
    }

    pub(super) fn from_parts(nodes: Vec<CatNode>, specs: Vec<VariableSpec>, min_real_width: f64) -> Result<Self, CatError> {
        let leaves = nodes.iter().filter(|n| n.is_leaf()).map(|n| n.id).collect();
        let cat = Self {
            nodes,
            root: NodeId(0),
            leaves,
            specs,
            min_real_width,
        };
        cat.validate()?;
        Ok(cat)
    }

    pub fn specs(&self) -> &[VariableSpec] {
        &self.specs
    }

    pub fn dims(&self) -> usize {
        self.specs.len()
    }

    pub fn min_real_width(&self) -> f64 {
        self.min_real_width
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn nodes(&self) -> &[CatNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Option<&CatNode> {
        self.nodes.get(id.0)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaves(&self) -> &BTreeSet<NodeId> {
        &self.leaves
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.leaves.contains(&id)
    }

    pub fn abstraction(&self, id: NodeId) -> Option<&Abstraction> {
        self.node(id).map(|n| &n.abstraction)
    }

    /// Leaf abstractions in id order.
    pub fn leaf_abstractions(&self) -> impl Iterator<Item = (NodeId, &Abstraction)> + '_ {
        self.leaves.iter().map(move |&id| (id, &self.nodes[id.0].abstraction))
    }

    /// Maps a concrete state to the leaf containing it by descending from
    /// the root, following the child whose interval holds the state on the
    /// node's split variable.
    pub fn find_abstract(&self, state: &[f64]) -> Result<NodeId, CatError> {
        if state.len() != self.dims() {
            return Err(CatError::DimensionMismatch {
                expected: self.dims(),
                got: state.len(),
            });
        }
        let root = &self.nodes[self.root.0];
        if !root.abstraction.contains(state, &self.specs) {
            return Err(CatError::OutOfBounds(state.to_vec()));
        }
        let mut node = root;
        while let Some(var) = node.split_var {
            let v = state[var];
            let hi = self.specs[var].hi;
            let next = node
                .children
                .iter()
                .map(|c| &self.nodes[c.0])
                .find(|c| c.abstraction.intervals[var].contains(v, hi));
            node = match next {
                Some(child) => child,
                None => return Err(CatError::OutOfBounds(state.to_vec())),
            };
        }
        Ok(node.id)
    }

    /// Splits leaf `leaf` into `f` children on variable `var` and returns the
    /// new leaf ids in interval order.
    pub fn refine_leaf(&mut self, leaf: NodeId, var: usize, f: usize) -> Result<Vec<NodeId>, CatError> {
        let node = self.node(leaf).ok_or(CatError::UnknownNode(leaf.0))?;
        if !node.is_leaf() {
            return Err(CatError::NotALeaf(leaf.0));
        }
        let parts = f_split(&node.abstraction, var, f, self.min_real_width)?;
        let first = self.nodes.len();
        let ids: Vec<NodeId> = (first..first + parts.len()).map(NodeId).collect();
        for (id, abstraction) in ids.iter().zip(parts) {
            self.nodes.push(CatNode {
                id: *id,
                abstraction,
                parent: Some(leaf),
                children: Vec::new(),
                split_var: None,
                split_factor: None,
            });
        }
        let parent = &mut self.nodes[leaf.0];
        parent.children = ids.clone();
        parent.split_var = Some(var);
        parent.split_factor = Some(f);
        self.leaves.remove(&leaf);
        self.leaves.extend(ids.iter().copied());
        Ok(ids)
    }

    /// Variables whose interval in `id`'s abstraction can still be split by `f`.
    pub fn splittable_vars(&self, id: NodeId, f: usize) -> Vec<usize> {
        self.node(id)
            .map(|n| {
                n.abstraction
                    .intervals
                    .iter()
                    .enumerate()
                    .filter(|(_, iv)| iv.can_split(f, self.min_real_width))
                    .map(|(i, _)| i)
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Compares this tree's abstract state space against `other`'s.
    ///
    /// `Finer` when every leaf here refines (or equals) some leaf of `other`;
    /// `StrictlyFiner` when, in addition, at least one leaf is a proper
    /// refinement.
    pub fn compare_fineness(&self, other: &Cat) -> Result<Fineness, CatError> {
        if self.specs != other.specs {
            return Err(CatError::SpecMismatch);
        }
        let mut proper = false;
        for (_, mine) in self.leaf_abstractions() {
            let mut matched = false;
            for (_, theirs) in other.leaf_abstractions() {
                if is_refinement(mine, theirs)? {
                    matched = true;
                    if mine != theirs {
                        proper = true;
                    }
                    break;
                }
            }
            if !matched {
                return Ok(Fineness::NotFiner);
            }
        }
        Ok(if proper { Fineness::StrictlyFiner } else { Fineness::Finer })
    }

    /// Checks the structural invariants: a single root spanning the full
    /// range, consistent parent/child links, children that exactly partition
    /// the parent's split interval, and a leaf set equal to the childless
    /// nodes.
    pub fn validate(&self) -> Result<(), CatError> {
        let bad = |msg: String| Err(CatError::Malformed(msg));
        if self.nodes.is_empty() {
            return bad("tree has no nodes".into());
        }
        if self.nodes[self.root.0].abstraction != Abstraction::initial(&self.specs) {
            return bad("root does not span the full variable ranges".into());
        }
        for (idx, node) in self.nodes.iter().enumerate() {
            if node.id.0 != idx {
                return bad(format!("node at position {idx} has id {}", node.id.0));
            }
            if node.abstraction.dims() != self.dims() {
                return bad(format!("node {idx} has {} intervals", node.abstraction.dims()));
            }
            if node
                .abstraction
                .intervals
                .iter()
                .zip(&self.specs)
                .any(|(iv, s)| iv.kind != s.kind || !iv.is_well_formed())
            {
                return bad(format!("node {idx} has an ill-formed interval"));
            }
            match node.parent {
                None if idx != self.root.0 => return bad(format!("node {idx} has no parent")),
                Some(_) if idx == self.root.0 => return bad("root has a parent".into()),
                Some(p) => match self.node(p) {
                    Some(parent) if parent.children.contains(&node.id) => {}
                    _ => return bad(format!("node {idx} is not listed by its parent {}", p.0)),
                },
                None => {}
            }
            if node.is_leaf() {
                if node.split_var.is_some() || node.split_factor.is_some() {
                    return bad(format!("leaf {idx} carries split metadata"));
                }
                continue;
            }
            let (Some(var), Some(f)) = (node.split_var, node.split_factor) else {
                return bad(format!("inner node {idx} lacks split metadata"));
            };
            if var >= self.dims() || f != node.children.len() || f < 2 {
                return bad(format!("inner node {idx} has inconsistent split metadata"));
            }
            let mut parts = Vec::with_capacity(f);
            for c in &node.children {
                let Some(child) = self.node(*c) else {
                    return bad(format!("node {idx} lists missing child {}", c.0));
                };
                if child.parent != Some(node.id) {
                    return bad(format!("child {} does not point back to {idx}", c.0));
                }
                if !is_direct_refinement(&child.abstraction, &node.abstraction, f)? {
                    return bad(format!("child {} is not a direct refinement of {idx}", c.0));
                }
                if child
                    .abstraction
                    .intervals
                    .iter()
                    .enumerate()
                    .any(|(i, iv)| i != var && *iv != node.abstraction.intervals[i])
                {
                    return bad(format!("child {} differs from {idx} off the split variable", c.0));
                }
                parts.push(child.abstraction.intervals[var]);
            }
            parts.sort_by(|a, b| a.lo.total_cmp(&b.lo));
            let whole = node.abstraction.intervals[var];
            let contiguous = parts.windows(2).all(|w| match whole.kind {
                VarKind::Integer => w[1].lo == w[0].hi + 1.0,
                VarKind::Real => w[1].lo == w[0].hi,
            });
            if !contiguous || parts[0].lo != whole.lo || parts[parts.len() - 1].hi != whole.hi {
                return bad(format!("children of node {idx} do not partition its split interval"));
            }
        }
        let childless: BTreeSet<NodeId> = self.nodes.iter().filter(|n| n.is_leaf()).map(|n| n.id).collect();
        if childless != self.leaves {
            return bad("leaf set does not match childless nodes".into());
        }
        Ok(())
    }
}
