use std::collections::BTreeMap;

use crate::cat::{f_split, Cat, NodeId};
use crate::envs::{ActionId, State};
use crate::Scalar;

use super::AgentError;

const TWO_MEANS_MAX_ITER: usize = 100;

/// One Q-value observation made while replaying the frozen policy.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionSample<F: Scalar> {
    /// 1-based evaluation episode.
    pub episode: usize,
    /// Primitive steps taken in the episode before this decision.
    pub step: usize,
    pub leaf: NodeId,
    pub action: ActionId,
    /// Scratch Q(leaf, action) right after the update.
    pub q_value: F,
    /// Concrete state at decision time.
    pub concrete_state: State,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionLog<F: Scalar> {
    pub samples: Vec<DispersionSample<F>>,
}

impl<F: Scalar> Default for DispersionLog<F> {
    fn default() -> Self {
        Self { samples: Vec::new() }
    }
}

impl<F: Scalar> DispersionLog<F> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn for_leaf(&self, leaf: NodeId) -> impl Iterator<Item = &DispersionSample<F>> + '_ {
        self.samples.iter().filter(move |s| s.leaf == leaf)
    }

    /// Same log with every Q-value multiplied by `factor`.
    pub fn scaled(&self, factor: F) -> Self {
        Self {
            samples: self
                .samples
                .iter()
                .map(|s| DispersionSample {
                    q_value: s.q_value * factor,
                    ..s.clone()
                })
                .collect(),
        }
    }
}

/// Population standard deviation.
pub fn std_dev<F: Scalar>(values: &[F]) -> F {
    if values.is_empty() {
        return F::zero();
    }
    let n = F::of(values.len() as f64);
    let mean = values.iter().fold(F::zero(), |acc, &v| acc + v) / n;
    let ss = values.iter().fold(F::zero(), |acc, &v| acc + (v - mean) * (v - mean));
    (ss / n).sqrt()
}

fn sum_sq_dev<F: Scalar>(values: &[F]) -> F {
    if values.is_empty() {
        return F::zero();
    }
    let n = F::of(values.len() as f64);
    let mean = values.iter().fold(F::zero(), |acc, &v| acc + v) / n;
    values.iter().fold(F::zero(), |acc, &v| acc + (v - mean) * (v - mean))
}

/// Standard deviation of logged Q-values for every (leaf, action) pair
/// with at least `min_samples` observations.
pub fn pair_dispersion<F: Scalar>(log: &DispersionLog<F>, min_samples: usize) -> BTreeMap<(NodeId, ActionId), F> {
    let mut groups: BTreeMap<(NodeId, ActionId), Vec<F>> = BTreeMap::new();
    for s in &log.samples {
        groups.entry((s.leaf, s.action)).or_default().push(s.q_value);
    }
    groups
        .into_iter()
        .filter(|(_, v)| v.len() >= min_samples)
        .map(|(k, v)| (k, std_dev(&v)))
        .collect()
}

/// Per-leaf instability score: pair standard deviations divided by the
/// largest one in the log, then the maximum over the leaf's actions. Scores
/// lie in `[0, 1]`. Empty when nothing qualifies or every pair is constant.
pub fn leaf_scores<F: Scalar>(log: &DispersionLog<F>, min_samples: usize) -> BTreeMap<NodeId, F> {
    let pairs = pair_dispersion(log, min_samples);
    let max = pairs.values().copied().fold(F::zero(), F::max);
    let mut scores = BTreeMap::new();
    if max <= F::zero() {
        return scores;
    }
    for ((leaf, _), std) in pairs {
        let score = std / max;
        let entry = scores.entry(leaf).or_insert(score);
        if score > *entry {
            *entry = score;
        }
    }
    scores
}

/// One-dimensional 2-means with centroids seeded at the minimum and maximum.
/// Returns `true` for members of the high cluster. Points equidistant from
/// both centroids join the low cluster.
pub fn two_means<F: Scalar>(values: &[F]) -> Vec<bool> {
    if values.is_empty() {
        return Vec::new();
    }
    let mut lo = values.iter().copied().fold(F::infinity(), F::min);
    let mut hi = values.iter().copied().fold(F::neg_infinity(), F::max);
    let mut assign: Vec<bool> = values.iter().map(|&v| (v - hi).abs() < (v - lo).abs()).collect();
    for _ in 0..TWO_MEANS_MAX_ITER {
        let mean_of = |high: bool| {
            let (sum, n) = values
                .iter()
                .zip(&assign)
                .filter(|(_, &a)| a == high)
                .fold((F::zero(), 0usize), |(s, n), (&v, _)| (s + v, n + 1));
            (n > 0).then(|| sum / F::of(n as f64))
        };
        if let Some(m) = mean_of(false) {
            lo = m;
        }
        if let Some(m) = mean_of(true) {
            hi = m;
        }
        let next: Vec<bool> = values.iter().map(|&v| (v - hi).abs() < (v - lo).abs()).collect();
        if next == assign {
            break;
        }
        assign = next;
    }
    assign
}

/// Leaves in the high cluster of the given scores, in id order. Empty when
/// fewer than two leaves are scored or all scores are equal.
pub fn cluster_high<F: Scalar>(scores: &[(NodeId, F)]) -> Vec<NodeId> {
    if scores.len() < 2 {
        return Vec::new();
    }
    let first = scores[0].1;
    if scores.iter().all(|(_, s)| *s == first) {
        return Vec::new();
    }
    let values: Vec<F> = scores.iter().map(|(_, s)| *s).collect();
    let mut out: Vec<NodeId> = scores
        .iter()
        .zip(two_means(&values))
        .filter(|(_, high)| *high)
        .map(|((id, _), _)| *id)
        .collect();
    out.sort();
    out
}

/// Abstract states whose Q-values disagree the most.
///
/// Scores leaves with [`leaf_scores`] and returns the high cluster of a
/// 1-D 2-means. A lone scored leaf with nonzero dispersion is returned by
/// itself, since there is nothing to cluster it against.
pub fn unstable_states<F: Scalar>(log: &DispersionLog<F>, min_samples: usize) -> Vec<NodeId> {
    let scores: Vec<(NodeId, F)> = leaf_scores(log, min_samples).into_iter().collect();
    if scores.len() == 1 {
        return if scores[0].1 > F::zero() { vec![scores[0].0] } else { Vec::new() };
    }
    cluster_high(&scores)
}

/// The variable of `leaf` whose tentative split best explains its logged
/// Q-values: the one minimising the summed within-part squared deviation
/// after bucketing samples by the part their concrete state falls in.
/// Ties go to the lowest index.
pub fn unstable_var<F: Scalar>(
    log: &DispersionLog<F>,
    leaf: NodeId,
    cat: &Cat,
    split_factor: usize,
    min_samples: usize,
) -> Result<usize, AgentError> {
    let node = cat.node(leaf).ok_or(crate::cat::CatError::UnknownNode(leaf.0))?;
    let samples: Vec<&DispersionSample<F>> = log.for_leaf(leaf).collect();
    if samples.len() < min_samples.max(1) {
        return Err(AgentError::InsufficientSamples(leaf));
    }
    let candidates = cat.splittable_vars(leaf, split_factor);
    if candidates.is_empty() {
        return Err(AgentError::ExhaustedLeaf(leaf));
    }
    let mut best: Option<(usize, F)> = None;
    for var in candidates {
        let parts = f_split(&node.abstraction, var, split_factor, cat.min_real_width())?;
        let hi = cat.specs()[var].hi;
        let mut buckets: Vec<Vec<F>> = vec![Vec::new(); parts.len()];
        for s in &samples {
            let v = s.concrete_state[var];
            if let Some(b) = parts.iter().position(|p| p.intervals[var].contains(v, hi)) {
                buckets[b].push(s.q_value);
            }
        }
        let within = buckets.iter().fold(F::zero(), |acc, b| acc + sum_sq_dev(b));
        match best {
            Some((_, w)) if within >= w => {}
            _ => best = Some((var, within)),
        }
    }
    Ok(best.expect("at least one candidate").0)
}
