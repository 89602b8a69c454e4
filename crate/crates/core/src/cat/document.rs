//! Text formats for trees: a JSON document that round-trips exactly, and a
//! DOT rendering for inspection.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Abstraction, Cat, CatError, CatNode, Interval, NodeId, VariableSpec};

pub const FORMAT_TAG: &str = "cat/1";

/// One node as written to disk. Children are implied by `parent` links and
/// listed in id order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: usize,
    pub intervals: Vec<[f64; 2]>,
    pub parent: Option<usize>,
    pub split_var: Option<usize>,
    pub split_factor: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatDocument {
    pub format: String,
    pub min_real_width: f64,
    pub specs: Vec<VariableSpec>,
    pub nodes: Vec<NodeRecord>,
}

impl CatDocument {
    pub fn from_cat(cat: &Cat) -> Self {
        let nodes = cat
            .nodes()
            .iter()
            .map(|n| NodeRecord {
                id: n.id.0,
                intervals: n.abstraction.intervals.iter().map(|iv| [iv.lo, iv.hi]).collect(),
                parent: n.parent.map(|p| p.0),
                split_var: n.split_var,
                split_factor: n.split_factor,
            })
            .collect();
        Self {
            format: FORMAT_TAG.to_string(),
            min_real_width: cat.min_real_width(),
            specs: cat.specs().to_vec(),
            nodes,
        }
    }

    /// Rebuilds the tree, rejecting documents that break the partition
    /// invariants.
    pub fn to_cat(&self) -> Result<Cat, CatError> {
        if self.format != FORMAT_TAG {
            return Err(CatError::Malformed(format!("unknown format `{}`", self.format)));
        }
        if self.specs.is_empty() {
            return Err(CatError::EmptySpecs);
        }
        for spec in &self.specs {
            spec.validate()?;
        }
        let mut records: Vec<&NodeRecord> = self.nodes.iter().collect();
        records.sort_by_key(|r| r.id);
        if records.iter().enumerate().any(|(i, r)| r.id != i) {
            return Err(CatError::Malformed("node ids must be 0..n without gaps or duplicates".into()));
        }
        let mut nodes: Vec<CatNode> = Vec::with_capacity(records.len());
        for r in &records {
            if r.intervals.len() != self.specs.len() {
                return Err(CatError::Malformed(format!("node {} has {} intervals", r.id, r.intervals.len())));
            }
            if let Some(p) = r.parent {
                if p >= records.len() || p == r.id {
                    return Err(CatError::Malformed(format!("node {} has invalid parent {p}", r.id)));
                }
            }
            let intervals = r
                .intervals
                .iter()
                .zip(&self.specs)
                .map(|(&[lo, hi], spec)| Interval { kind: spec.kind, lo, hi })
                .collect();
            nodes.push(CatNode {
                id: NodeId(r.id),
                abstraction: Abstraction::new(intervals),
                parent: r.parent.map(NodeId),
                children: Vec::new(),
                split_var: r.split_var,
                split_factor: r.split_factor,
            });
        }
        for r in &records {
            if let Some(p) = r.parent {
                nodes[p].children.push(NodeId(r.id));
            }
        }
        Cat::from_parts(nodes, self.specs.clone(), self.min_real_width)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, CatError> {
        serde_json::from_str(text).map_err(|e| CatError::Malformed(e.to_string()))
    }
}

impl Cat {
    pub fn to_document(&self) -> String {
        CatDocument::from_cat(self).to_json()
    }

    pub fn from_document(text: &str) -> Result<Self, CatError> {
        CatDocument::from_json(text)?.to_cat()
    }
}

/// Renders a tree as a DOT digraph. Every node is labelled with its interval
/// list; leaves are filled.
pub fn export_dot(cat: &Cat) -> String {
    let mut out = String::from("digraph cat {\n  node [shape=box, fontname=\"monospace\"];\n");
    for node in cat.nodes() {
        let label = node.abstraction.to_string().replace('"', "\\\"");
        if node.is_leaf() {
            let _ = writeln!(out, "  n{} [label=\"{label}\", style=filled, fillcolor=\"#9ecae1\"];", node.id.0);
        } else {
            let _ = writeln!(out, "  n{} [label=\"{label}\"];", node.id.0);
        }
    }
    for node in cat.nodes() {
        for child in &node.children {
            let var = node.split_var.map(|v| cat.specs()[v].name.as_str()).unwrap_or("");
            let _ = writeln!(out, "  n{} -> n{} [label=\"{var}\"];", node.id.0, child.0);
        }
    }
    out.push_str("}\n");
    out
}
