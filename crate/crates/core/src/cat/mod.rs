//! Conditional abstraction trees.
//!
//! A [`Cat`] partitions a box-shaped state space into axis-aligned cells.
//! Each node holds an [`Abstraction`] (one [`Interval`] per state variable);
//! refining a leaf splits one of its intervals into `f` contiguous parts.
//! Because each branch is refined independently, how a variable is
//! partitioned can depend on the ranges of the other variables.

mod document;
mod interval;
mod tree;

pub use document::{export_dot, CatDocument, NodeRecord};
pub use interval::{Interval, VarKind, VariableSpec};
pub use tree::{Cat, CatNode, Fineness, NodeId, DEFAULT_MIN_REAL_WIDTH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CatError {
    #[error("no state variables given")]
    EmptySpecs,
    #[error("invalid variable spec `{name}`: {reason}")]
    InvalidSpec { name: String, reason: String },
    #[error("split factor must be at least 2, got {0}")]
    InvalidFactor(usize),
    #[error("interval [{lo}, {hi}] cannot be split into {f} parts")]
    Unsplittable { lo: f64, hi: f64, f: usize },
    #[error("variable index {index} out of range for {dims} variables")]
    VariableOutOfRange { index: usize, dims: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("state {0:?} lies outside the root abstraction")]
    OutOfBounds(Vec<f64>),
    #[error("node {0} does not exist")]
    UnknownNode(usize),
    #[error("node {0} is not a leaf")]
    NotALeaf(usize),
    #[error("trees are built over different variables")]
    SpecMismatch,
    #[error("malformed document: {0}")]
    Malformed(String),
}

/// One interval per state variable; a box in state space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Abstraction {
    pub intervals: Vec<Interval>,
}

impl Abstraction {
    pub fn new(intervals: Vec<Interval>) -> Self {
        Self { intervals }
    }

    /// The full-range abstraction spanning every variable's global bounds.
    pub fn initial(specs: &[VariableSpec]) -> Self {
        Self::new(specs.iter().map(VariableSpec::full_interval).collect())
    }

    pub fn dims(&self) -> usize {
        self.intervals.len()
    }

    /// Inclusion test: every component of `state` lies in its interval.
    pub fn contains(&self, state: &[f64], specs: &[VariableSpec]) -> bool {
        state.len() == self.intervals.len()
            && self
                .intervals
                .iter()
                .zip(state)
                .zip(specs)
                .all(|((iv, &v), spec)| iv.contains(v, spec.hi))
    }

    pub fn overlaps(&self, other: &Abstraction, specs: &[VariableSpec]) -> bool {
        self.intervals
            .iter()
            .zip(&other.intervals)
            .zip(specs)
            .all(|((a, b), spec)| a.overlaps(b, spec.hi))
    }

    fn check_dims(&self, other: &Abstraction) -> Result<(), CatError> {
        if self.dims() != other.dims() {
            return Err(CatError::DimensionMismatch {
                expected: other.dims(),
                got: self.dims(),
            });
        }
        Ok(())
    }
}

impl std::fmt::Display for Abstraction {
    fn fmt(&self, out: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, iv) in self.intervals.iter().enumerate() {
            if i > 0 {
                out.write_str(" ")?;
            }
            write!(out, "{iv}")?;
        }
        Ok(())
    }
}

/// The `f`-split refinement of `theta` with respect to variable `var`:
/// `f` abstractions equal to `theta` except on `var`, whose interval is cut
/// into contiguous sub-intervals.
pub fn f_split(theta: &Abstraction, var: usize, f: usize, min_real_width: f64) -> Result<Vec<Abstraction>, CatError> {
    let interval = theta.intervals.get(var).ok_or(CatError::VariableOutOfRange {
        index: var,
        dims: theta.dims(),
    })?;
    let parts = interval.split(f, min_real_width)?;
    Ok(parts
        .into_iter()
        .map(|part| {
            let mut intervals = theta.intervals.clone();
            intervals[var] = part;
            Abstraction::new(intervals)
        })
        .collect())
}

/// `theta_b` refines `theta_a`: every interval of `b` is contained in the
/// matching interval of `a`. Reflexive and transitive.
pub fn is_refinement(theta_b: &Abstraction, theta_a: &Abstraction) -> Result<bool, CatError> {
    theta_b.check_dims(theta_a)?;
    Ok(theta_b.intervals.iter().zip(&theta_a.intervals).all(|(b, a)| b.is_subset_of(a)))
}

/// `theta_b` is one `f`-split step below `theta_a`: exactly one interval
/// strictly shrinks to an `f`-th of its parent's width, all others are equal.
///
/// Integer widths that do not divide evenly accept either the floor or the
/// ceiling of `|a| / f`, which is what [`f_split`] produces.
pub fn is_direct_refinement(theta_b: &Abstraction, theta_a: &Abstraction, f: usize) -> Result<bool, CatError> {
    theta_b.check_dims(theta_a)?;
    if f < 2 {
        return Err(CatError::InvalidFactor(f));
    }
    let mut changed = None;
    for (i, (b, a)) in theta_b.intervals.iter().zip(&theta_a.intervals).enumerate() {
        if b == a {
            continue;
        }
        if changed.is_some() || !b.is_subset_of(a) {
            return Ok(false);
        }
        changed = Some(i);
    }
    let Some(i) = changed else {
        return Ok(false);
    };
    let (b, a) = (&theta_b.intervals[i], &theta_a.intervals[i]);
    let ok = match a.kind {
        VarKind::Integer => {
            let wa = a.width() as i64;
            let wb = b.width() as i64;
            let f = f as i64;
            wb == wa / f || wb == (wa + f - 1) / f
        }
        VarKind::Real => {
            let ratio = a.width() / b.width();
            (ratio - f as f64).abs() <= 1e-9 * f as f64
        }
    };
    Ok(ok)
}
