use std::collections::BTreeSet;

use super::MiningConfig;
use crate::docel::ObjectId;
use crate::shift::{Ataots, TraceSet};

/// Candidate inputs of one output, ranked by the number of traces they cover.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateModelSet {
    pub entries: Vec<(Ataots, TraceSet)>,
    /// Number of objects of the output's type.
    pub object_type_count: usize,
}

impl CandidateModelSet {
    /// Sorts by decreasing coverage, ties by node order.
    pub fn new(mut entries: Vec<(Ataots, TraceSet)>, object_type_count: usize) -> Self {
        entries.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then_with(|| a.0.cmp(&b.0)));
        CandidateModelSet { entries, object_type_count }
    }
}

/// Groups candidates into (inputs, traces) models:
/// identical trace sets share a model, large enough subsets get their own
/// model, sufficiently overlapping sets join on the common traces, and sets
/// reaching uncovered traces start a new model.
pub fn find_input_models(
    candidates: &CandidateModelSet,
    config: &MiningConfig,
) -> Vec<(BTreeSet<Ataots>, BTreeSet<ObjectId>)> {
    let bound = candidates.object_type_count as f64 * config.min_traceprop;
    let mut models: Vec<(BTreeSet<Ataots>, BTreeSet<ObjectId>)> = Vec::new();
    let mut covered: BTreeSet<ObjectId> = BTreeSet::new();
    for (node, ts) in &candidates.entries {
        let t = &ts.object_ids;
        if t.is_empty() {
            continue;
        }
        let existing = models.len();
        let mut spawned = Vec::new();
        for m in models.iter_mut().take(existing) {
            if t == &m.1 {
                m.0.insert(node.clone());
            } else if t.is_subset(&m.1) {
                if t.len() as f64 > bound {
                    let mut inputs = m.0.clone();
                    inputs.insert(node.clone());
                    spawned.push((inputs, t.clone()));
                }
            } else {
                let common: BTreeSet<ObjectId> = t.intersection(&m.1).cloned().collect();
                if !common.is_empty() && common.len() as f64 / t.len() as f64 > config.min_dev {
                    let mut inputs = m.0.clone();
                    inputs.insert(node.clone());
                    spawned.push((inputs, common));
                }
            }
        }
        for s in spawned {
            if let Some(same) = models.iter_mut().find(|m| m.1 == s.1) {
                same.0.extend(s.0);
            } else {
                models.push(s);
            }
        }
        if !t.is_subset(&covered) && t.len() as f64 > bound {
            models.push(([node.clone()].into(), t.clone()));
            covered.extend(t.iter().cloned());
        }
    }
    models
}
