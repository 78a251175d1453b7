use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{DecisionTree, EncodedDataset, FeatureEncoding, TargetKind, TreeNode};
use crate::docel::AttributeValue;

/// A feature restricted to the interval (lower, upper] in encoded space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub feature: usize,
    pub name: String,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub encoding: FeatureEncoding,
}

fn num(x: f64) -> String {
    format!("{x}")
}

impl Condition {
    pub fn holds(&self, x: &[f64]) -> bool {
        let v = x[self.feature];
        self.lower.map_or(true, |l| v > l) && self.upper.map_or(true, |u| v <= u)
    }

    /// Decoded form, e.g. `Importance = Low` or `90 < Order Value <= 100`.
    pub fn describe(&self) -> String {
        if self.encoding.is_numeric() {
            return match (self.lower, self.upper) {
                (Some(l), Some(u)) => format!("{} < {} <= {}", num(l), self.name, num(u)),
                (Some(l), None) => format!("{} > {}", self.name, num(l)),
                (None, Some(u)) => format!("{} <= {}", self.name, num(u)),
                (None, None) => format!("{} is any", self.name),
            };
        }
        let values: Vec<String> = self
            .encoding
            .codes_in(self.lower, self.upper)
            .iter()
            .map(|v| v.to_string())
            .collect();
        match values.as_slice() {
            [one] => format!("{} = {}", self.name, one),
            _ => format!("{} in {{{}}}", self.name, values.join(", ")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub conditions: Vec<Condition>,
    pub outcome: String,
    /// Encoded outcome (class index or value).
    pub outcome_code: f64,
    pub support: usize,
}

impl Rule {
    pub fn holds(&self, x: &[f64]) -> bool {
        self.conditions.iter().all(|c| c.holds(x))
    }

    pub fn describe(&self, target: &str) -> String {
        let conds: Vec<String> = self.conditions.iter().map(Condition::describe).collect();
        if conds.is_empty() {
            format!("{target} = {}", self.outcome)
        } else {
            format!("IF {} THEN {target} = {}", conds.join(" AND "), self.outcome)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleList {
    pub target: String,
    pub target_kind: TargetKind,
    pub feature_names: Vec<String>,
    pub encodings: Vec<FeatureEncoding>,
    pub rules: Vec<Rule>,
}

impl RuleList {
    pub fn firing(&self, x: &[f64]) -> Vec<usize> {
        self.rules
            .iter()
            .enumerate()
            .filter(|(_, r)| r.holds(x))
            .map(|(i, _)| i)
            .collect()
    }

    /// Outcome for a raw input row, if every feature can be encoded.
    pub fn evaluate(&self, raw: &BTreeMap<String, AttributeValue>) -> Option<&str> {
        let x: Vec<f64> = self
            .feature_names
            .iter()
            .zip(&self.encodings)
            .map(|(n, e)| raw.get(n).and_then(|v| e.encode(v)))
            .collect::<Option<_>>()?;
        self.rules.iter().find(|r| r.holds(&x)).map(|r| r.outcome.as_str())
    }
}

fn merge(conds: &mut Vec<Condition>, feature: usize, name: &str, enc: &FeatureEncoding, lower: Option<f64>, upper: Option<f64>) {
    if let Some(c) = conds.iter_mut().find(|c| c.feature == feature) {
        if let Some(l) = lower {
            c.lower = Some(c.lower.map_or(l, |cur| cur.max(l)));
        }
        if let Some(u) = upper {
            c.upper = Some(c.upper.map_or(u, |cur| cur.min(u)));
        }
    } else {
        conds.push(Condition { feature, name: name.to_string(), lower, upper, encoding: enc.clone() });
    }
}

/// Decoded leaf outcome.
pub fn outcome_label(ds_target: &FeatureEncoding, kind: TargetKind, value: f64) -> String {
    match kind {
        TargetKind::Regression => num(value),
        TargetKind::Classification => ds_target
            .decode(value)
            .map(|v| v.to_string())
            .unwrap_or_else(|| num(value)),
    }
}

/// One rule per leaf, conditions merged per feature along the path.
pub fn tree_to_rules(tree: &DecisionTree, ds: &EncodedDataset) -> RuleList {
    let mut rules = Vec::new();
    let mut stack: Vec<(usize, Vec<Condition>)> = vec![(0, Vec::new())];
    while let Some((i, conds)) = stack.pop() {
        match &tree.nodes[i] {
            TreeNode::Leaf { value, samples, .. } => {
                let mut conditions = conds;
                conditions.sort_by_key(|c| c.feature);
                rules.push(Rule {
                    conditions,
                    outcome: outcome_label(&ds.target_encoding, tree.target_kind, *value),
                    outcome_code: *value,
                    support: *samples,
                });
            }
            TreeNode::Split { feature, threshold, left, right, .. } => {
                let name = &ds.feature_names[*feature];
                let enc = &ds.encodings[*feature];
                let mut r = conds.clone();
                merge(&mut r, *feature, name, enc, Some(*threshold), None);
                let mut l = conds;
                merge(&mut l, *feature, name, enc, None, Some(*threshold));
                // right pushed first so the left branch is emitted first
                stack.push((*right, r));
                stack.push((*left, l));
            }
        }
    }
    RuleList {
        target: ds.target_name.clone(),
        target_kind: tree.target_kind,
        feature_names: ds.feature_names.clone(),
        encodings: ds.encodings.clone(),
        rules,
    }
}
