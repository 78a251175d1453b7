//! Shift bookkeeping: which activity changed which attribute of which object,
//! and in what order.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::docel::{AttributeScope, AttributeValue, DocelLog, EventId, ObjectId, ValueKind};

/// An (attribute, activity, object type, shift number) node.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Ataots {
    pub attribute: String,
    pub activity: String,
    pub object_type: String,
    pub shift_number: usize,
}

impl Ataots {
    pub fn new(attribute: &str, activity: &str, object_type: &str, shift_number: usize) -> Self {
        Ataots {
            attribute: attribute.to_string(),
            activity: activity.to_string(),
            object_type: object_type.to_string(),
            shift_number,
        }
    }

    /// `Attribute_shift-n`.
    pub fn label(&self) -> String {
        format!("{}_shift-{}", self.attribute, self.shift_number)
    }

    pub fn full_label(&self) -> String {
        format!("{} | {} | {}", self.label(), self.activity, self.object_type)
    }
}

impl fmt::Display for Ataots {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.attribute, self.activity, self.object_type, self.shift_number)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftEntry {
    pub event_id: EventId,
    /// Position of the event in log order.
    pub position: usize,
    pub value: AttributeValue,
}

type SeriesKey = (String, String, String);

#[derive(Debug, Clone, Default)]
pub struct ShiftIndex {
    /// (attribute, activity, object type) → object → ordered shifts.
    series: BTreeMap<SeriesKey, BTreeMap<ObjectId, Vec<ShiftEntry>>>,
    static_origin: BTreeMap<(String, ObjectId), EventId>,
    traces: BTreeMap<ObjectId, Vec<EventId>>,
    object_type_counts: BTreeMap<String, usize>,
    object_types: HashMap<ObjectId, String>,
    kinds: BTreeMap<(String, String), ValueKind>,
    activity_types: BTreeMap<String, BTreeSet<String>>,
}

pub fn build_shift_index(log: &DocelLog) -> ShiftIndex {
    let mut idx = ShiftIndex::default();
    for (tname, ot) in &log.schema().object_types {
        idx.object_type_counts.insert(tname.clone(), 0);
        for (at, kind) in ot.static_attributes.iter().chain(&ot.dynamic_attributes) {
            idx.kinds.insert((tname.clone(), at.clone()), *kind);
        }
    }
    for o in log.objects().values() {
        *idx.object_type_counts.entry(o.object_type.clone()).or_default() += 1;
        idx.object_types.insert(o.object_id.clone(), o.object_type.clone());
        let trace: Vec<EventId> = log
            .trace_positions(o.object_id.as_str())
            .iter()
            .map(|&p| log.events()[p].event_id.clone())
            .collect();
        if let Some(&first) = log.trace_positions(o.object_id.as_str()).first() {
            let e = &log.events()[first];
            for (at, value) in &o.static_attributes {
                idx.static_origin
                    .insert((at.clone(), o.object_id.clone()), e.event_id.clone());
                idx.series
                    .entry((at.clone(), e.activity.clone(), o.object_type.clone()))
                    .or_default()
                    .entry(o.object_id.clone())
                    .or_default()
                    .push(ShiftEntry { event_id: e.event_id.clone(), position: first, value: value.clone() });
            }
        }
        idx.traces.insert(o.object_id.clone(), trace);
    }
    for e in log.events() {
        for (t, _) in e.all_objects() {
            idx.activity_types
                .entry(e.activity.clone())
                .or_default()
                .insert(t.to_string());
        }
    }
    for r in log.dynamic_records() {
        let (Some(pos), Some(ot)) = (
            log.event_position(r.event_id.as_str()),
            idx.object_types.get(&r.object_id).cloned(),
        ) else {
            continue;
        };
        let activity = log.events()[pos].activity.clone();
        idx.series
            .entry((r.attribute.clone(), activity, ot))
            .or_default()
            .entry(r.object_id.clone())
            .or_default()
            .push(ShiftEntry { event_id: r.event_id.clone(), position: pos, value: r.value.clone() });
    }
    for objs in idx.series.values_mut() {
        for entries in objs.values_mut() {
            entries.sort_by_key(|s| s.position);
        }
    }
    idx
}

impl ShiftIndex {
    /// Ordered shifts of `attribute` on `object` made by `activity`.
    pub fn shifts(&self, attribute: &str, activity: &str, object: &str) -> &[ShiftEntry] {
        let Some(ot) = self.object_types.get(object) else {
            return &[];
        };
        self.series
            .get(&(attribute.to_string(), activity.to_string(), ot.clone()))
            .and_then(|m| m.get(object))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// The n-th (1-based) shift of the node's attribute on `object`.
    pub fn nth_shift(&self, node: &Ataots, object: &str) -> Option<&ShiftEntry> {
        self.series_for(node)?.get(object)?.get(node.shift_number.checked_sub(1)?)
    }

    pub fn series_for(&self, node: &Ataots) -> Option<&BTreeMap<ObjectId, Vec<ShiftEntry>>> {
        self.series.get(&(
            node.attribute.clone(),
            node.activity.clone(),
            node.object_type.clone(),
        ))
    }

    /// Every (attribute, activity, object type) with at least one shift.
    pub fn series_keys(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.series.keys().map(|(a, b, c)| (a.as_str(), b.as_str(), c.as_str()))
    }

    pub fn static_origin(&self, attribute: &str, object: &str) -> Option<&EventId> {
        self.static_origin.get(&(attribute.to_string(), ObjectId::from(object)))
    }

    pub fn trace(&self, object: &str) -> &[EventId] {
        self.traces.get(object).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn object_type_count(&self, object_type: &str) -> usize {
        self.object_type_counts.get(object_type).copied().unwrap_or(0)
    }

    pub fn object_type_counts(&self) -> &BTreeMap<String, usize> {
        &self.object_type_counts
    }

    pub fn object_type(&self, object: &str) -> Option<&str> {
        self.object_types.get(object).map(String::as_str)
    }

    pub fn kind(&self, object_type: &str, attribute: &str) -> Option<ValueKind> {
        self.kinds.get(&(object_type.to_string(), attribute.to_string())).copied()
    }

    /// Object types taking part in at least one event of `activity`.
    pub fn activity_types(&self, activity: &str) -> impl Iterator<Item = &str> {
        self.activity_types
            .get(activity)
            .into_iter()
            .flat_map(|s| s.iter().map(String::as_str))
    }

    pub fn activities(&self) -> impl Iterator<Item = &str> {
        self.activity_types.keys().map(String::as_str)
    }

    /// JSON dump used by test tooling.
    pub fn debug_json(&self) -> serde_json::Value {
        let shifts: Vec<serde_json::Value> = self
            .series
            .iter()
            .flat_map(|((at, act, ot), objs)| {
                objs.iter().map(move |(o, entries)| {
                    serde_json::json!({
                        "attribute": at,
                        "activity": act,
                        "object_type": ot,
                        "object": o,
                        "events": entries.iter().map(|e| e.event_id.as_str()).collect::<Vec<_>>(),
                    })
                })
            })
            .collect();
        serde_json::json!({
            "shifts": shifts,
            "traces": self.traces,
            "object_type_counts": self.object_type_counts,
        })
    }
}

/// Per-activity candidate inputs and outputs as (attribute, object type).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CandidateVariables {
    pub inputs: BTreeMap<String, BTreeSet<(String, String)>>,
    pub outputs: BTreeMap<String, BTreeSet<(String, String)>>,
}

impl CandidateVariables {
    pub fn is_input(&self, activity: &str, attribute: &str, object_type: &str) -> bool {
        self.inputs
            .get(activity)
            .is_some_and(|s| s.contains(&(attribute.to_string(), object_type.to_string())))
    }

    pub fn is_output(&self, activity: &str, attribute: &str, object_type: &str) -> bool {
        self.outputs
            .get(activity)
            .is_some_and(|s| s.contains(&(attribute.to_string(), object_type.to_string())))
    }
}

/// Outputs of activity `a` are attributes it shifts with more than one distinct
/// value on more than `min_shift` of the objects of the type. Inputs of `a` are
/// the discriminative attributes of every object type taking part in `a`.
/// Free-text attributes never qualify.
pub fn candidate_variables(index: &ShiftIndex, min_shift: f64) -> CandidateVariables {
    let mut out = CandidateVariables::default();
    let mut discriminative: BTreeSet<(String, String)> = BTreeSet::new();
    for ((at, act, ot), objs) in &index.series {
        if index.kind(ot, at) == Some(ValueKind::Text) {
            continue;
        }
        let mut values = objs.values().flatten().map(|s| &s.value);
        let Some(first) = values.next() else { continue };
        if values.all(|v| v == first) {
            continue;
        }
        discriminative.insert((at.clone(), ot.clone()));
        if objs.len() as f64 > min_shift * index.object_type_count(ot) as f64 {
            out.outputs
                .entry(act.clone())
                .or_default()
                .insert((at.clone(), ot.clone()));
        }
    }
    for (act, types) in &index.activity_types {
        let set: BTreeSet<(String, String)> = discriminative
            .iter()
            .filter(|(_, ot)| types.contains(ot))
            .cloned()
            .collect();
        if !set.is_empty() {
            out.inputs.insert(act.clone(), set);
        }
    }
    out
}

pub fn enumerate_ataots(index: &ShiftIndex, candidates: &CandidateVariables, max_shift: usize) -> Vec<Ataots> {
    let mut out = Vec::new();
    for (act, pairs) in &candidates.outputs {
        for (at, ot) in pairs {
            let Some(objs) = index.series.get(&(at.clone(), act.clone(), ot.clone())) else {
                continue;
            };
            let most = objs.values().map(Vec::len).max().unwrap_or(0);
            for n in 1..=max_shift.min(most) {
                out.push(Ataots::new(at, act, ot, n));
            }
        }
    }
    out.sort();
    out
}

/// Objects of the node's type with at least `shift_number` shifts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceSet {
    pub object_ids: BTreeSet<ObjectId>,
    pub anchor: Ataots,
}

impl TraceSet {
    pub fn len(&self) -> usize {
        self.object_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.object_ids.is_empty()
    }
}

pub fn traces_with_shift(index: &ShiftIndex, node: &Ataots) -> TraceSet {
    let object_ids = index
        .series_for(node)
        .map(|objs| {
            objs.iter()
                .filter(|(_, e)| e.len() >= node.shift_number)
                .map(|(o, _)| o.clone())
                .collect()
        })
        .unwrap_or_default();
    TraceSet { object_ids, anchor: node.clone() }
}

/// Whether the attribute of this node is static for its object type.
pub fn is_static(log: &DocelLog, node: &Ataots) -> bool {
    log.schema()
        .attribute(&node.object_type, &node.attribute)
        .is_some_and(|s| s.scope == AttributeScope::Static)
}
