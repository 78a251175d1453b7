//! Seeds a decision per output node, searches temporally preceding correlated
//! inputs, groups them into models by the object traces they cover, and
//! gates each model on forest accuracy.

mod correlation;
mod models;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use correlation::{bin_count, correlate, discretize, nmi_codes, CorrelationError};
pub use models::{find_input_models, CandidateModelSet};

use crate::docel::{validate_log, AttributeValue, DocelLog, ObjectId};
use crate::ml::{
    encode_features, evaluate_accuracy, train_decision_tree, train_random_forest, tree_to_rules,
    DecisionTree, EncodedDataset, FeatureEncoding, LearnerConfig, MlError, RandomForest, RuleList,
    TargetKind,
};
use crate::shift::{
    build_shift_index, candidate_variables, enumerate_ataots, traces_with_shift, Ataots,
    CandidateVariables, ShiftIndex, TraceSet,
};

pub const MAX_RECURSION_DEPTH: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiningConfig {
    pub min_shift: f64,
    pub max_shift: usize,
    pub min_traceprop: f64,
    pub min_corr: f64,
    pub min_dev: f64,
    pub min_support: f64,
    pub learner: LearnerConfig,
    pub rng_seed: u64,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            min_shift: 0.2,
            max_shift: 3,
            min_traceprop: 0.3,
            min_corr: 0.3,
            min_dev: 0.3,
            min_support: 0.3,
            learner: LearnerConfig::default(),
            rng_seed: 42,
        }
    }
}

impl MiningConfig {
    pub fn validate(&self) -> Result<(), MiningError> {
        let fractions = [
            ("min_shift", self.min_shift),
            ("min_traceprop", self.min_traceprop),
            ("min_corr", self.min_corr),
            ("min_dev", self.min_dev),
            ("min_support", self.min_support),
            ("regression_tolerance", self.learner.regression_tolerance),
        ];
        for (name, v) in fractions {
            if !(0.0..=1.0).contains(&v) {
                return Err(MiningError::InvalidConfig(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if self.max_shift < 1 {
            return Err(MiningError::InvalidConfig("max_shift must be at least 1".into()));
        }
        if self.learner.n_trees < 1 || self.learner.cv_folds < 2 {
            return Err(MiningError::InvalidConfig("need at least 1 tree and 2 folds".into()));
        }
        Ok(())
    }

    fn learner(&self) -> LearnerConfig {
        LearnerConfig { seed: self.rng_seed, ..self.learner.clone() }
    }
}

#[derive(Debug, Error)]
pub enum MiningError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("log failed validation: {0}")]
    InvalidLog(String),
    #[error("unknown object {0}")]
    UnknownObject(String),
    #[error(transparent)]
    Learner(#[from] MlError),
}

impl MiningError {
    pub fn code(&self) -> &'static str {
        match self {
            MiningError::InvalidConfig(_) => "InvalidConfig",
            MiningError::InvalidLog(_) => "InvalidLog",
            MiningError::UnknownObject(_) => "UnknownObject",
            MiningError::Learner(e) => e.code(),
        }
    }
}

/// Rounds to the six decimals used in exported artifacts.
pub fn round6(x: f64) -> f64 {
    format!("{x:.6}").parse().expect("formatted float parses")
}

/// Supporting (output object, input object) pairs of one edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeInfo {
    pub supporting_pairs: BTreeSet<(ObjectId, ObjectId)>,
    pub correlation: f64,
}

impl EdgeInfo {
    /// Distinct output-side objects backing the edge.
    pub fn supporting_objects(&self) -> usize {
        self.supporting_pairs
            .iter()
            .map(|(o, _)| o)
            .collect::<BTreeSet<_>>()
            .len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveredDecision {
    pub node: Ataots,
    pub input_nodes: BTreeSet<Ataots>,
    pub trace_set: TraceSet,
}

/// Logic learned for one decision: a single tree over the model's inputs,
/// kept for export, plus the forest's cross-validated accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionModel {
    pub output: Ataots,
    pub inputs: Vec<Ataots>,
    pub feature_names: Vec<String>,
    pub encodings: Vec<FeatureEncoding>,
    pub target_name: String,
    pub target_encoding: FeatureEncoding,
    pub target_kind: TargetKind,
    pub accuracy: f64,
    pub rows: usize,
    pub tree: DecisionTree,
}

impl DecisionModel {
    /// A row-less dataset carrying the model's encodings.
    pub fn schema(&self) -> EncodedDataset {
        EncodedDataset {
            rows: Vec::new(),
            target: Vec::new(),
            feature_names: self.feature_names.clone(),
            encodings: self.encodings.clone(),
            target_name: self.target_name.clone(),
            target_encoding: self.target_encoding.clone(),
            target_kind: self.target_kind,
        }
    }

    pub fn rules(&self) -> RuleList {
        tree_to_rules(&self.tree, &self.schema())
    }
}

/// A trained forest together with its exportable summary.
#[derive(Debug, Clone)]
pub struct PredictiveModel {
    pub forest: RandomForest,
    pub decision: DecisionModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveredDrd {
    pub top: Ataots,
    pub trace_set: TraceSet,
    pub decisions: BTreeMap<Ataots, DiscoveredDecision>,
    /// Nodes without inputs of their own.
    pub inputs: BTreeSet<Ataots>,
    /// (input, output) → support and correlation.
    pub edges: BTreeMap<(Ataots, Ataots), EdgeInfo>,
    pub models: BTreeMap<Ataots, DecisionModel>,
}

impl DiscoveredDrd {
    fn new(top: Ataots, trace_set: TraceSet) -> Self {
        DiscoveredDrd {
            top,
            trace_set,
            decisions: BTreeMap::new(),
            inputs: BTreeSet::new(),
            edges: BTreeMap::new(),
            models: BTreeMap::new(),
        }
    }

    pub fn nodes(&self) -> BTreeSet<Ataots> {
        self.decisions.keys().chain(&self.inputs).cloned().collect()
    }

    pub fn edge_keys(&self) -> BTreeSet<(Ataots, Ataots)> {
        self.edges.keys().cloned().collect()
    }

    pub fn correlations(&self) -> BTreeMap<(Ataots, Ataots), f64> {
        self.edges.iter().map(|(k, e)| (k.clone(), e.correlation)).collect()
    }

    pub fn is_decision(&self, node: &Ataots) -> bool {
        self.decisions.contains_key(node)
    }

    /// Whether `to` is reachable from `from` along edges.
    fn reaches(&self, from: &Ataots, to: &Ataots) -> bool {
        let mut stack = vec![from];
        let mut seen = BTreeSet::new();
        while let Some(n) = stack.pop() {
            if n == to {
                return true;
            }
            if !seen.insert(n) {
                continue;
            }
            stack.extend(self.edges.keys().filter(|(i, _)| i == n).map(|(_, o)| o));
        }
        false
    }

    /// Re-derives decision/input membership from the edge set.
    fn settle(&mut self) {
        let outputs: BTreeSet<Ataots> = self.edges.keys().map(|(_, o)| o.clone()).collect();
        let all: BTreeSet<Ataots> = self.nodes().into_iter().chain(self.edges.keys().map(|(i, _)| i.clone())).collect();
        self.inputs = all.into_iter().filter(|n| !outputs.contains(n)).collect();
        self.decisions.retain(|n, _| outputs.contains(n));
        self.models.retain(|n, _| outputs.contains(n));
        for d in self.decisions.values_mut() {
            d.input_nodes = self
                .edges
                .keys()
                .filter(|(_, o)| o == &d.node)
                .map(|(i, _)| i.clone())
                .collect();
        }
    }
}

/// One forest evaluation made during mining.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelAttempt {
    pub output: Ataots,
    pub inputs: Vec<Ataots>,
    pub traces: usize,
    pub accuracy: Option<f64>,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiningOutcome {
    pub drds: Vec<DiscoveredDrd>,
    pub attempts: Vec<ModelAttempt>,
}

/// Objects of `object_type2` sharing at least one event with `o`.
pub fn related_objects(
    index: &ShiftIndex,
    log: &DocelLog,
    o: &str,
    object_type2: &str,
) -> Result<BTreeSet<ObjectId>, MiningError> {
    if index.object_type(o).is_none() {
        return Err(MiningError::UnknownObject(o.to_string()));
    }
    Ok(log
        .trace_positions(o)
        .iter()
        .flat_map(|&p| log.events()[p].object_refs.get(object_type2).into_iter().flatten())
        .cloned()
        .collect())
}

struct Candidate {
    node: Ataots,
    /// (output object, input object, input value, output value)
    pairs: Vec<(ObjectId, ObjectId, AttributeValue, AttributeValue)>,
    traces: BTreeSet<ObjectId>,
}

fn pair_correlation<'a>(
    pairs: impl Iterator<Item = &'a (ObjectId, ObjectId, AttributeValue, AttributeValue)>,
) -> Option<f64> {
    let (xs, ys): (Vec<AttributeValue>, Vec<AttributeValue>) =
        pairs.map(|(_, _, i, o)| (i.clone(), o.clone())).unzip();
    correlate(&xs, &ys).ok()
}

struct Miner<'a> {
    index: &'a ShiftIndex,
    candidates: &'a CandidateVariables,
    nodes: &'a [Ataots],
    config: &'a MiningConfig,
    related: HashMap<ObjectId, BTreeMap<String, BTreeSet<ObjectId>>>,
}

#[derive(Clone)]
struct Branch {
    drd: DiscoveredDrd,
    expanded: BTreeSet<Ataots>,
}

impl<'a> Miner<'a> {
    fn new(
        log: &'a DocelLog,
        index: &'a ShiftIndex,
        candidates: &'a CandidateVariables,
        nodes: &'a [Ataots],
        config: &'a MiningConfig,
    ) -> Self {
        let mut related: HashMap<ObjectId, BTreeMap<String, BTreeSet<ObjectId>>> = HashMap::new();
        for e in log.events() {
            for (_, o) in e.all_objects() {
                let entry = related.entry(o.clone()).or_default();
                for (t2, o2) in e.all_objects() {
                    entry.entry(t2.to_string()).or_default().insert(o2.clone());
                }
            }
        }
        Miner { index, candidates, nodes, config, related }
    }

    fn related(&self, o: &ObjectId, object_type: &str) -> impl Iterator<Item = &ObjectId> {
        self.related
            .get(o)
            .and_then(|m| m.get(object_type))
            .into_iter()
            .flatten()
    }

    fn collect(&self, input: &Ataots, output: &Ataots, traces: &BTreeSet<ObjectId>) -> Candidate {
        let mut pairs = Vec::new();
        let mut covered = BTreeSet::new();
        for o in traces {
            let Some(out) = self.index.nth_shift(output, o.as_str()) else { continue };
            for o2 in self.related(o, &input.object_type) {
                let Some(inp) = self.index.nth_shift(input, o2.as_str()) else { continue };
                if inp.position < out.position {
                    pairs.push((o.clone(), o2.clone(), inp.value.clone(), out.value.clone()));
                    covered.insert(o.clone());
                }
            }
        }
        Candidate { node: input.clone(), pairs, traces: covered }
    }

    fn candidate_inputs(&self, d: &Ataots, path: &[Ataots]) -> Vec<&'a Ataots> {
        self.nodes
            .iter()
            .filter(|n| {
                *n != d
                    && !path.contains(n)
                    && self.candidates.is_input(&d.activity, &n.attribute, &n.object_type)
            })
            .collect()
    }

    /// Raw training rows: one per combination of related input objects.
    fn raw_rows(
        &self,
        inputs: &[(&Candidate, String)],
        output: &Ataots,
        target_key: &str,
        traces: &BTreeSet<ObjectId>,
    ) -> Vec<BTreeMap<String, AttributeValue>> {
        let mut rows = Vec::new();
        for o in traces {
            let Some(out) = self.index.nth_shift(output, o.as_str()) else { continue };
            let mut partial: Vec<BTreeMap<String, AttributeValue>> =
                vec![BTreeMap::from([(target_key.to_string(), out.value.clone())])];
            for (c, key) in inputs {
                let values: Vec<&AttributeValue> =
                    c.pairs.iter().filter(|p| &p.0 == o).map(|p| &p.2).collect();
                partial = partial
                    .into_iter()
                    .flat_map(|row| {
                        values.iter().map(move |v| {
                            let mut r = row.clone();
                            r.insert(key.clone(), (*v).clone());
                            r
                        })
                    })
                    .collect();
            }
            rows.extend(partial);
        }
        rows
    }

    fn find_inputs(
        &self,
        branch: &mut Branch,
        d: &Ataots,
        path: &mut Vec<Ataots>,
        forks: &mut Vec<Branch>,
        attempts: &mut Vec<ModelAttempt>,
    ) {
        if path.len() >= MAX_RECURSION_DEPTH {
            log::warn!("recursion depth limit reached at {d}");
            return;
        }
        if !branch.expanded.insert(d.clone()) {
            return;
        }
        let cfg = self.config;
        let td = traces_with_shift(self.index, d).object_ids;
        let ot_count = self.index.object_type_count(&d.object_type) as f64;
        let mut retained: Vec<Candidate> = Vec::new();
        for n in self.candidate_inputs(d, path) {
            let c = self.collect(n, d, &td);
            if (c.traces.len() as f64) <= ot_count * cfg.min_traceprop {
                continue;
            }
            match pair_correlation(c.pairs.iter()) {
                Some(r) if r > cfg.min_corr => retained.push(c),
                _ => {}
            }
        }
        let set = CandidateModelSet::new(
            retained
                .iter()
                .map(|c| (c.node.clone(), TraceSet { object_ids: c.traces.clone(), anchor: c.node.clone() }))
                .collect(),
            self.index.object_type_count(&d.object_type),
        );
        let by_node: BTreeMap<&Ataots, &Candidate> = retained.iter().map(|c| (&c.node, c)).collect();
        for (members, traces) in find_input_models(&set, cfg) {
            // restrict each member to the model's traces and keep it only if it
            // still clears the correlation bar there
            let mut restricted: Vec<(Candidate, f64)> = Vec::new();
            for m in &members {
                let c = by_node[m];
                let pairs: Vec<_> = c.pairs.iter().filter(|p| traces.contains(&p.0)).cloned().collect();
                match pair_correlation(pairs.iter()) {
                    Some(r) if r > cfg.min_corr => restricted.push((
                        Candidate {
                            node: c.node.clone(),
                            traces: pairs.iter().map(|p| p.0.clone()).collect(),
                            pairs,
                        },
                        r,
                    )),
                    _ => {}
                }
            }
            if restricted.is_empty() {
                continue;
            }
            let inputs: Vec<&Candidate> = restricted.iter().map(|(c, _)| c).collect();
            let built = self.build_model(&inputs, d, &traces);
            let (model, accuracy) = match built {
                Ok((m, a)) => (Some(m), Some(a)),
                Err(_) => (None, None),
            };
            let accepted = accuracy.is_some_and(|a| a > cfg.min_support);
            attempts.push(ModelAttempt {
                output: d.clone(),
                inputs: inputs.iter().map(|c| c.node.clone()).collect(),
                traces: traces.len(),
                accuracy,
                accepted,
            });
            let Some(model) = model.filter(|_| accepted) else { continue };
            if traces == td {
                self.accept(branch, d, &restricted, model, &traces, path, forks, attempts);
            } else {
                let mut fork = branch.clone();
                if d == &fork.drd.top {
                    fork.drd.trace_set = TraceSet { object_ids: traces.clone(), anchor: d.clone() };
                }
                self.accept(&mut fork, d, &restricted, model, &traces, path, forks, attempts);
                forks.push(fork);
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn accept(
        &self,
        branch: &mut Branch,
        d: &Ataots,
        inputs: &[(Candidate, f64)],
        model: PredictiveModel,
        traces: &BTreeSet<ObjectId>,
        path: &mut Vec<Ataots>,
        forks: &mut Vec<Branch>,
        attempts: &mut Vec<ModelAttempt>,
    ) {
        let mut added = Vec::new();
        for (c, r) in inputs {
            if branch.drd.reaches(d, &c.node) {
                log::warn!("skipping {} -> {d}: would close a cycle", c.node);
                continue;
            }
            let key = (c.node.clone(), d.clone());
            let info = EdgeInfo {
                supporting_pairs: c.pairs.iter().map(|p| (p.0.clone(), p.1.clone())).collect(),
                correlation: round6(*r),
            };
            branch.drd.edges.insert(key, info);
            added.push(c.node.clone());
        }
        if added.is_empty() {
            return;
        }
        branch.drd.decisions.insert(
            d.clone(),
            DiscoveredDecision {
                node: d.clone(),
                input_nodes: BTreeSet::new(),
                trace_set: TraceSet { object_ids: traces.clone(), anchor: d.clone() },
            },
        );
        branch.drd.models.insert(d.clone(), model.decision);
        branch.drd.settle();
        path.push(d.clone());
        for n in added {
            self.find_inputs(branch, &n, path, forks, attempts);
        }
        path.pop();
    }

    fn build_model(
        &self,
        inputs: &[&Candidate],
        output: &Ataots,
        traces: &BTreeSet<ObjectId>,
    ) -> Result<(PredictiveModel, f64), MiningError> {
        let nodes: Vec<&Ataots> = inputs.iter().map(|c| &c.node).chain([output]).collect();
        let keys = feature_keys(&nodes);
        let target_key = keys.last().expect("output key").clone();
        let keyed: Vec<(&Candidate, String)> = inputs.iter().copied().zip(keys).collect();
        let raw = self.raw_rows(&keyed, output, &target_key, traces);
        let ds = encode_features(&raw, &target_key)?;
        let order: BTreeMap<&str, &Ataots> = keyed.iter().map(|(c, k)| (k.as_str(), &c.node)).collect();
        let inputs_in_order = ds.feature_names.iter().map(|f| order[f.as_str()].clone()).collect();
        fit(&ds, output, inputs_in_order, &self.config.learner())
    }
}

/// Feature names for a model: labels, disambiguated by activity when two
/// nodes share a label.
fn feature_keys(nodes: &[&Ataots]) -> Vec<String> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for n in nodes {
        *counts.entry(n.label()).or_default() += 1;
    }
    nodes
        .iter()
        .map(|n| {
            let l = n.label();
            if counts[&l] > 1 {
                format!("{l} ({}, {})", n.activity, n.object_type)
            } else {
                l
            }
        })
        .collect()
}

fn fit(
    ds: &EncodedDataset,
    output: &Ataots,
    inputs: Vec<Ataots>,
    learner: &LearnerConfig,
) -> Result<(PredictiveModel, f64), MiningError> {
    if ds.len() < 2 {
        return Err(MlError::TooFewSamples { needed: 2, got: ds.len() }.into());
    }
    let folds = learner.cv_folds.min(ds.len());
    let accuracy = round6(evaluate_accuracy(learner, ds, folds)?);
    let forest = train_random_forest(ds, learner)?;
    let mut tree = train_decision_tree(ds, learner)?;
    quantize_tree(&mut tree);
    let decision = DecisionModel {
        output: output.clone(),
        inputs,
        feature_names: ds.feature_names.clone(),
        encodings: ds.encodings.clone(),
        target_name: ds.target_name.clone(),
        target_encoding: ds.target_encoding.clone(),
        target_kind: ds.target_kind,
        accuracy,
        rows: ds.len(),
        tree,
    };
    Ok((PredictiveModel { forest, decision }, accuracy))
}

fn quantize_tree(tree: &mut DecisionTree) {
    use crate::ml::TreeNode;
    tree.training_accuracy = round6(tree.training_accuracy);
    for n in &mut tree.nodes {
        match n {
            TreeNode::Split { threshold, .. } => *threshold = round6(*threshold),
            TreeNode::Leaf { value, .. } => *value = round6(*value),
        }
    }
}

/// Trains and scores a model for `output` from `inputs` over `traces`.
pub fn build_predictive_model(
    inputs: &BTreeSet<Ataots>,
    output: &Ataots,
    traces: &TraceSet,
    index: &ShiftIndex,
    log: &DocelLog,
    config: &MiningConfig,
) -> Result<(PredictiveModel, f64), MiningError> {
    if inputs.is_empty() {
        return Err(MlError::TooFewSamples { needed: 2, got: 0 }.into());
    }
    let candidates = CandidateVariables::default();
    let miner = Miner::new(log, index, &candidates, &[], config);
    let collected: Vec<Candidate> = inputs
        .iter()
        .map(|i| miner.collect(i, output, &traces.object_ids))
        .collect();
    let refs: Vec<&Candidate> = collected.iter().collect();
    miner.build_model(&refs, output, &traces.object_ids)
}

/// Keeps the first of every group of DRDs with equal node and edge sets.
pub fn deduplicate_drds(drds: Vec<DiscoveredDrd>) -> Vec<DiscoveredDrd> {
    let mut seen = BTreeSet::new();
    drds.into_iter()
        .filter(|d| seen.insert((d.nodes(), d.edge_keys())))
        .collect()
}

pub fn mine_dmn_models(log: &DocelLog, config: &MiningConfig) -> Result<Vec<DiscoveredDrd>, MiningError> {
    mine_with_attempts(log, config).map(|o| o.drds)
}

/// Mining plus a record of every model evaluated on the way.
pub fn mine_with_attempts(log: &DocelLog, config: &MiningConfig) -> Result<MiningOutcome, MiningError> {
    config.validate()?;
    let report = validate_log(log);
    if let Some(first) = report.errors.first() {
        return Err(MiningError::InvalidLog(format!("{}: {}: {}", first.code, first.location, first.message)));
    }
    let index = build_shift_index(log);
    let candidates = candidate_variables(&index, config.min_shift);
    let nodes = enumerate_ataots(&index, &candidates, config.max_shift);
    let miner = Miner::new(log, &index, &candidates, &nodes, config);
    let per_top: Vec<(Vec<DiscoveredDrd>, Vec<ModelAttempt>)> = nodes
        .par_iter()
        .map(|top| {
            let mut main = Branch {
                drd: DiscoveredDrd::new(top.clone(), traces_with_shift(&index, top)),
                expanded: BTreeSet::new(),
            };
            let mut forks = Vec::new();
            let mut attempts = Vec::new();
            miner.find_inputs(&mut main, top, &mut Vec::new(), &mut forks, &mut attempts);
            let drds = std::iter::once(main)
                .chain(forks)
                .map(|b| b.drd)
                .filter(|d| d.models.contains_key(&d.top))
                .collect();
            (drds, attempts)
        })
        .collect();
    let mut drds = Vec::new();
    let mut attempts = Vec::new();
    for (d, a) in per_top {
        drds.extend(d);
        attempts.extend(a);
    }
    Ok(MiningOutcome { drds: deduplicate_drds(drds), attempts })
}
