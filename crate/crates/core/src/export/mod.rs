//! DOT and canonical JSON renderings of discovered DRDs, trees and rules.

mod canonical;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use canonical::{to_canonical_json, write_canonical};

use crate::discovery::{DecisionModel, DiscoveredDecision, DiscoveredDrd, EdgeInfo};
use crate::docel::ObjectId;
use crate::ml::{outcome_label, Condition, DecisionTree, EncodedDataset, FeatureEncoding, TargetKind, TreeNode};
use crate::shift::{Ataots, TraceSet};

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("malformed DRD document: {0}")]
    Malformed(String),
}

impl ExportError {
    pub fn code(&self) -> &'static str {
        "Malformed"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Decision,
    Input,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrdNode {
    /// Unique: label, activity and object type.
    pub id: String,
    pub label: String,
    pub attribute: String,
    pub activity: String,
    pub object_type: String,
    pub shift_number: usize,
    pub kind: NodeKind,
    /// Traces a decision was learned on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_set: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrdEdge {
    pub from: String,
    pub to: String,
    pub supporting_object_count: usize,
    pub correlation: f64,
    /// (output object, input object)
    pub supporting_pairs: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub decision: String,
    /// Node ids in feature order.
    pub inputs: Vec<String>,
    pub feature_names: Vec<String>,
    pub encodings: Vec<FeatureEncoding>,
    pub target_name: String,
    pub target_encoding: FeatureEncoding,
    pub target_kind: TargetKind,
    pub accuracy: f64,
    pub rows: usize,
    pub tree: DecisionTree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub config: serde_json::Value,
    pub log_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrdDocument {
    pub top: String,
    pub trace_set: Vec<String>,
    pub nodes: Vec<DrdNode>,
    pub edges: Vec<DrdEdge>,
    pub models: Vec<ModelDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Metadata>,
}

fn ids(set: &BTreeSet<ObjectId>) -> Vec<String> {
    set.iter().map(|o| o.to_string()).collect()
}

impl DrdDocument {
    pub fn from_drd(drd: &DiscoveredDrd, metadata: Option<Metadata>) -> Self {
        let nodes = drd
            .nodes()
            .into_iter()
            .map(|n| {
                let decision = drd.decisions.get(&n);
                DrdNode {
                    id: n.full_label(),
                    label: n.label(),
                    attribute: n.attribute.clone(),
                    activity: n.activity.clone(),
                    object_type: n.object_type.clone(),
                    shift_number: n.shift_number,
                    kind: if decision.is_some() { NodeKind::Decision } else { NodeKind::Input },
                    trace_set: decision.map(|d| ids(&d.trace_set.object_ids)),
                }
            })
            .collect();
        let edges = drd
            .edges
            .iter()
            .map(|((i, o), e)| DrdEdge {
                from: i.full_label(),
                to: o.full_label(),
                supporting_object_count: e.supporting_objects(),
                correlation: e.correlation,
                supporting_pairs: e
                    .supporting_pairs
                    .iter()
                    .map(|(a, b)| (a.to_string(), b.to_string()))
                    .collect(),
            })
            .collect();
        let models = drd
            .models
            .values()
            .map(|m| ModelDocument {
                decision: m.output.full_label(),
                inputs: m.inputs.iter().map(Ataots::full_label).collect(),
                feature_names: m.feature_names.clone(),
                encodings: m.encodings.clone(),
                target_name: m.target_name.clone(),
                target_encoding: m.target_encoding.clone(),
                target_kind: m.target_kind,
                accuracy: m.accuracy,
                rows: m.rows,
                tree: m.tree.clone(),
            })
            .collect();
        DrdDocument {
            top: drd.top.full_label(),
            trace_set: ids(&drd.trace_set.object_ids),
            nodes,
            edges,
            models,
            metadata,
        }
    }

    pub fn to_drd(&self) -> Result<DiscoveredDrd, ExportError> {
        let mut by_id: BTreeMap<&str, Ataots> = self
            .nodes
            .iter()
            .map(|n| (n.id.as_str(), Ataots::new(&n.attribute, &n.activity, &n.object_type, n.shift_number)))
            .collect();
        if by_id.len() != self.nodes.len() {
            return Err(ExportError::Malformed("duplicate node id".into()));
        }
        let top_node = match by_id.get(self.top.as_str()) {
            Some(t) => t.clone(),
            None => parse_id(&self.top)?,
        };
        by_id.entry(self.top.as_str()).or_insert_with(|| top_node.clone());
        let lookup = |id: &str| {
            by_id
                .get(id)
                .cloned()
                .ok_or_else(|| ExportError::Malformed(format!("unknown node {id}")))
        };
        let set = |v: &[String], anchor: &Ataots| TraceSet {
            object_ids: v.iter().map(|s| ObjectId::from(s.as_str())).collect(),
            anchor: anchor.clone(),
        };
        let mut edges = BTreeMap::new();
        for e in &self.edges {
            let info = EdgeInfo {
                supporting_pairs: e
                    .supporting_pairs
                    .iter()
                    .map(|(a, b)| (ObjectId::from(a.as_str()), ObjectId::from(b.as_str())))
                    .collect(),
                correlation: e.correlation,
            };
            edges.insert((lookup(&e.from)?, lookup(&e.to)?), info);
        }
        let mut decisions = BTreeMap::new();
        let mut inputs = BTreeSet::new();
        for n in &self.nodes {
            let node = lookup(&n.id)?;
            match n.kind {
                NodeKind::Input => {
                    inputs.insert(node);
                }
                NodeKind::Decision => {
                    let input_nodes = edges.keys().filter(|(_, o)| o == &node).map(|(i, _)| i.clone()).collect();
                    let trace_set = set(n.trace_set.as_deref().unwrap_or_default(), &node);
                    decisions.insert(node.clone(), DiscoveredDecision { node, input_nodes, trace_set });
                }
            }
        }
        let mut models = BTreeMap::new();
        for m in &self.models {
            let output = lookup(&m.decision)?;
            let model = DecisionModel {
                output: output.clone(),
                inputs: m.inputs.iter().map(|i| lookup(i)).collect::<Result<_, _>>()?,
                feature_names: m.feature_names.clone(),
                encodings: m.encodings.clone(),
                target_name: m.target_name.clone(),
                target_encoding: m.target_encoding.clone(),
                target_kind: m.target_kind,
                accuracy: m.accuracy,
                rows: m.rows,
                tree: m.tree.clone(),
            };
            models.insert(output, model);
        }
        Ok(DiscoveredDrd {
            trace_set: set(&self.trace_set, &top_node),
            top: top_node,
            decisions,
            inputs,
            edges,
            models,
        })
    }
}

/// Inverse of `Ataots::full_label`.
fn parse_id(id: &str) -> Result<Ataots, ExportError> {
    let bad = || ExportError::Malformed(format!("cannot read node id {id}"));
    let parts: Vec<&str> = id.split(" | ").collect();
    let [label, activity, object_type] = parts.as_slice() else { return Err(bad()) };
    let (attribute, n) = label.rsplit_once("_shift-").ok_or_else(bad)?;
    let n = n.parse().map_err(|_| bad())?;
    Ok(Ataots::new(attribute, activity, object_type, n))
}

pub fn drd_to_json(drd: &DiscoveredDrd) -> String {
    drd_to_json_with(drd, None)
}

pub fn drd_to_json_with(drd: &DiscoveredDrd, metadata: Option<Metadata>) -> String {
    to_canonical_json(&DrdDocument::from_drd(drd, metadata))
}

pub fn drd_from_json(text: &str) -> Result<(DiscoveredDrd, Option<Metadata>), ExportError> {
    let doc: DrdDocument = serde_json::from_str(text).map_err(|e| ExportError::Malformed(e.to_string()))?;
    Ok((doc.to_drd()?, doc.metadata))
}

/// A double-quoted DOT string; `lines` are joined with DOT line breaks.
fn dot_string(lines: &[&str]) -> String {
    let escaped: Vec<String> = lines
        .iter()
        .map(|l| l.replace('\\', "\\\\").replace('"', "\\\""))
        .collect();
    format!("\"{}\"", escaped.join("\\n"))
}

/// Bottom-up DRD: decisions as boxes, inputs as rounded boxes, edges labelled
/// with the number of supporting objects.
pub fn drd_to_dot(drd: &DiscoveredDrd) -> String {
    let nodes: Vec<Ataots> = drd.nodes().into_iter().collect();
    let index: BTreeMap<&Ataots, usize> = nodes.iter().enumerate().map(|(i, n)| (n, i)).collect();
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", dot_string(&[&format!("DRD {}", drd.top.label())]));
    out.push_str("  rankdir=BT;\n  node [fontname=\"Helvetica\"];\n");
    for (i, n) in nodes.iter().enumerate() {
        let label = dot_string(&[&n.label(), &n.activity, &n.object_type]);
        let style = if drd.is_decision(n) { "shape=box" } else { "shape=box, style=rounded" };
        let _ = writeln!(out, "  n{i} [label={label}, {style}];");
    }
    for ((from, to), e) in &drd.edges {
        let _ = writeln!(
            out,
            "  n{} -> n{} [label=\"{}\"];",
            index[from],
            index[to],
            e.supporting_objects()
        );
    }
    out.push_str("}\n");
    out
}

fn num(x: f64) -> String {
    format!("{x}")
}

/// Splits as feature boxes, edges carrying the decoded condition of each
/// branch, leaves as outcome and sample count.
pub fn tree_to_dot(tree: &DecisionTree, schema: &EncodedDataset) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", dot_string(&[&format!("Tree {}", schema.target_name)]));
    out.push_str("  node [fontname=\"Helvetica\"];\n");
    // (node, bounds per feature on the path)
    let mut stack: Vec<(usize, BTreeMap<usize, (Option<f64>, Option<f64>)>)> = vec![(0, BTreeMap::new())];
    let mut lines = Vec::new();
    while let Some((i, bounds)) = stack.pop() {
        match &tree.nodes[i] {
            TreeNode::Leaf { value, samples, .. } => {
                let outcome = outcome_label(&schema.target_encoding, tree.target_kind, *value);
                let label = dot_string(&[&format!("{} = {outcome}", schema.target_name), &format!("samples = {samples}")]);
                lines.push((i, format!("  t{i} [label={label}, shape=box, style=rounded];")));
            }
            TreeNode::Split { feature, threshold, left, right, samples } => {
                let name = &schema.feature_names[*feature];
                let enc = &schema.encodings[*feature];
                let label = dot_string(&[name, &format!("samples = {samples}")]);
                lines.push((i, format!("  t{i} [label={label}, shape=box];")));
                let (lo, hi) = bounds.get(feature).copied().unwrap_or((None, None));
                let describe = |lower: Option<f64>, upper: Option<f64>| {
                    if enc.is_numeric() {
                        match upper {
                            Some(u) => format!("{name} <= {}", num(u)),
                            None => format!("{name} > {}", num(lower.expect("one bound set"))),
                        }
                    } else {
                        Condition { feature: *feature, name: name.clone(), lower, upper, encoding: enc.clone() }.describe()
                    }
                };
                let left_bounds = (lo, Some(hi.map_or(*threshold, |h| h.min(*threshold))));
                let right_bounds = (Some(lo.map_or(*threshold, |l| l.max(*threshold))), hi);
                let (ll, rl) = if enc.is_numeric() {
                    (describe(None, Some(*threshold)), describe(Some(*threshold), None))
                } else {
                    (describe(left_bounds.0, left_bounds.1), describe(right_bounds.0, right_bounds.1))
                };
                lines.push((i, format!("  t{i} -> t{left} [label={}];", dot_string(&[&ll]))));
                lines.push((i, format!("  t{i} -> t{right} [label={}];", dot_string(&[&rl]))));
                let mut lb = bounds.clone();
                lb.insert(*feature, left_bounds);
                let mut rb = bounds;
                rb.insert(*feature, right_bounds);
                stack.push((*right, rb));
                stack.push((*left, lb));
            }
        }
    }
    // nodes by index, each node's edges right after it
    lines.sort_by_key(|(i, _)| *i);
    for (_, l) in lines {
        out.push_str(&l);
        out.push('\n');
    }
    out.push_str("}\n");
    out
}

/// The model of one decision as a row-less dataset for rendering.
pub fn model_tree_to_dot(model: &DecisionModel) -> String {
    tree_to_dot(&model.tree, &model.schema())
}
