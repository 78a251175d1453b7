//! Data-aware object-centric event logs: events, typed objects with static
//! attributes, and dynamic attribute records keyed by (event, object).

mod io;
mod validate;
mod value;

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{log_fingerprint, parse_docel, read_docel, write_docel, LoadedLog};
pub use validate::{validate_log, Issue, IssueCode, ValidationReport};
pub use value::{AttributeValue, ValueKind};

macro_rules! string_id {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }

        impl Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }
    };
}

string_id!(ObjectId);
string_id!(EventId);

#[derive(Debug, Error)]
pub enum DocelError {
    #[error("{0} not found")]
    MissingFile(String),
    #[error("{location}: {message}")]
    Invalid {
        code: IssueCode,
        location: String,
        message: String,
    },
    #[error("unknown object {0}")]
    UnknownObject(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{location}: {message}")]
    Malformed { location: String, message: String },
}

impl DocelError {
    pub fn code(&self) -> &'static str {
        match self {
            DocelError::MissingFile(_) => "MissingFile",
            DocelError::Invalid { code, .. } => code.as_str(),
            DocelError::UnknownObject(_) => "UnknownObject",
            DocelError::Io { .. } => "IoFailure",
            DocelError::Malformed { .. } => "Malformed",
        }
    }
}

impl From<Issue> for DocelError {
    fn from(issue: Issue) -> Self {
        DocelError::Invalid {
            code: issue.code,
            location: issue.location,
            message: issue.message,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeScope {
    Static,
    Dynamic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttributeSpec {
    pub scope: AttributeScope,
    pub kind: ValueKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ObjectTypeSchema {
    pub static_attributes: BTreeMap<String, ValueKind>,
    pub dynamic_attributes: BTreeMap<String, ValueKind>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LogSchema {
    pub object_types: BTreeMap<String, ObjectTypeSchema>,
    pub event_attributes: BTreeMap<String, ValueKind>,
}

impl LogSchema {
    pub fn attribute(&self, object_type: &str, attribute: &str) -> Option<AttributeSpec> {
        let ot = self.object_types.get(object_type)?;
        if let Some(kind) = ot.static_attributes.get(attribute) {
            return Some(AttributeSpec { scope: AttributeScope::Static, kind: *kind });
        }
        ot.dynamic_attributes
            .get(attribute)
            .map(|kind| AttributeSpec { scope: AttributeScope::Dynamic, kind: *kind })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub event_id: EventId,
    pub activity: String,
    pub timestamp: NaiveDateTime,
    /// Only non-empty sets are kept.
    pub object_refs: BTreeMap<String, BTreeSet<ObjectId>>,
    pub event_attributes: BTreeMap<String, AttributeValue>,
}

impl Event {
    pub fn new(id: impl Into<EventId>, activity: impl Into<String>, timestamp: NaiveDateTime) -> Self {
        Event {
            event_id: id.into(),
            activity: activity.into(),
            timestamp,
            object_refs: BTreeMap::new(),
            event_attributes: BTreeMap::new(),
        }
    }

    pub fn with_object(mut self, object_type: &str, id: impl Into<ObjectId>) -> Self {
        self.object_refs
            .entry(object_type.to_string())
            .or_default()
            .insert(id.into());
        self
    }

    pub fn with_attribute(mut self, name: &str, value: AttributeValue) -> Self {
        self.event_attributes.insert(name.to_string(), value);
        self
    }

    pub fn references(&self, o: &ObjectId) -> bool {
        self.object_refs.values().any(|s| s.contains(o))
    }

    pub fn all_objects(&self) -> impl Iterator<Item = (&str, &ObjectId)> {
        self.object_refs
            .iter()
            .flat_map(|(t, ids)| ids.iter().map(move |o| (t.as_str(), o)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectInstance {
    pub object_id: ObjectId,
    pub object_type: String,
    pub static_attributes: BTreeMap<String, AttributeValue>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicAttributeRecord {
    pub record_id: String,
    pub attribute: String,
    pub value: AttributeValue,
    pub event_id: EventId,
    pub object_id: ObjectId,
}

/// An immutable event log. Events are kept sorted by (timestamp, event id)
/// and dynamic records by (attribute, record id).
#[derive(Debug, Clone)]
pub struct DocelLog {
    schema: LogSchema,
    objects: BTreeMap<ObjectId, ObjectInstance>,
    events: Vec<Event>,
    dynamic_records: Vec<DynamicAttributeRecord>,
    event_pos: HashMap<EventId, usize>,
    traces: HashMap<ObjectId, Vec<usize>>,
}

impl PartialEq for DocelLog {
    fn eq(&self, other: &Self) -> bool {
        self.schema == other.schema
            && self.objects == other.objects
            && self.events == other.events
            && self.dynamic_records == other.dynamic_records
    }
}

impl DocelLog {
    /// Assembles a log without validating it. Use [`validate_log`] or
    /// [`LogBuilder`] when the parts come from untrusted input.
    pub fn new(
        schema: LogSchema,
        objects: impl IntoIterator<Item = ObjectInstance>,
        mut events: Vec<Event>,
        mut dynamic_records: Vec<DynamicAttributeRecord>,
    ) -> Self {
        for e in &mut events {
            e.object_refs.retain(|_, ids| !ids.is_empty());
        }
        events.sort_by(|a, b| {
            a.timestamp
                .cmp(&b.timestamp)
                .then_with(|| a.event_id.cmp(&b.event_id))
        });
        dynamic_records.sort_by(|a, b| {
            a.attribute
                .cmp(&b.attribute)
                .then_with(|| a.record_id.cmp(&b.record_id))
        });
        let objects: BTreeMap<ObjectId, ObjectInstance> = objects
            .into_iter()
            .map(|o| (o.object_id.clone(), o))
            .collect();
        let mut event_pos = HashMap::with_capacity(events.len());
        let mut traces: HashMap<ObjectId, Vec<usize>> = HashMap::new();
        for (i, e) in events.iter().enumerate() {
            event_pos.entry(e.event_id.clone()).or_insert(i);
            for (_, o) in e.all_objects() {
                traces.entry(o.clone()).or_default().push(i);
            }
        }
        DocelLog { schema, objects, events, dynamic_records, event_pos, traces }
    }

    pub fn schema(&self) -> &LogSchema {
        &self.schema
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn objects(&self) -> &BTreeMap<ObjectId, ObjectInstance> {
        &self.objects
    }

    pub fn object(&self, id: &str) -> Option<&ObjectInstance> {
        self.objects.get(id)
    }

    pub fn dynamic_records(&self) -> &[DynamicAttributeRecord] {
        &self.dynamic_records
    }

    pub fn object_types(&self) -> impl Iterator<Item = &str> {
        self.schema.object_types.keys().map(String::as_str)
    }

    pub fn objects_of_type<'a>(&'a self, object_type: &'a str) -> impl Iterator<Item = &'a ObjectInstance> + 'a {
        self.objects.values().filter(move |o| o.object_type == object_type)
    }

    pub fn event(&self, id: &str) -> Option<&Event> {
        self.event_pos.get(id).map(|&i| &self.events[i])
    }

    /// Position of an event in log order.
    pub fn event_position(&self, id: &str) -> Option<usize> {
        self.event_pos.get(id).copied()
    }

    /// Log positions of the events an object takes part in.
    pub fn trace_positions(&self, id: &str) -> &[usize] {
        self.traces.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn object_trace(&self, id: &str) -> Result<Vec<&Event>, DocelError> {
        if !self.objects.contains_key(id) {
            return Err(DocelError::UnknownObject(id.to_string()));
        }
        Ok(self.trace_positions(id).iter().map(|&i| &self.events[i]).collect())
    }
}

/// Free-function form of [`DocelLog::object_trace`].
pub fn object_trace<'a>(log: &'a DocelLog, id: &str) -> Result<Vec<&'a Event>, DocelError> {
    log.object_trace(id)
}

/// Incremental construction of a validated log.
#[derive(Debug, Default)]
pub struct LogBuilder {
    schema: LogSchema,
    objects: Vec<ObjectInstance>,
    events: Vec<Event>,
    records: Vec<DynamicAttributeRecord>,
}

impl LogBuilder {
    pub fn new(schema: LogSchema) -> Self {
        LogBuilder { schema, ..Default::default() }
    }

    pub fn object(
        &mut self,
        id: impl Into<ObjectId>,
        object_type: &str,
        statics: impl IntoIterator<Item = (String, AttributeValue)>,
    ) -> &mut Self {
        self.objects.push(ObjectInstance {
            object_id: id.into(),
            object_type: object_type.to_string(),
            static_attributes: statics.into_iter().collect(),
        });
        self
    }

    pub fn event(&mut self, event: Event) -> &mut Self {
        self.events.push(event);
        self
    }

    pub fn record(
        &mut self,
        record_id: impl Into<String>,
        attribute: &str,
        value: AttributeValue,
        event_id: impl Into<EventId>,
        object_id: impl Into<ObjectId>,
    ) -> &mut Self {
        self.records.push(DynamicAttributeRecord {
            record_id: record_id.into(),
            attribute: attribute.to_string(),
            value,
            event_id: event_id.into(),
            object_id: object_id.into(),
        });
        self
    }

    pub fn build(self) -> Result<DocelLog, DocelError> {
        let mut seen = BTreeSet::new();
        for o in &self.objects {
            if !seen.insert(o.object_id.clone()) {
                return Err(Issue::new(
                    IssueCode::DuplicateId,
                    format!("object {}", o.object_id),
                    "object id used twice",
                )
                .into());
            }
        }
        let log = DocelLog::new(self.schema, self.objects, self.events, self.records);
        let report = validate_log(&log);
        match report.errors.into_iter().next() {
            Some(issue) => Err(issue.into()),
            None => Ok(log),
        }
    }
}

pub(crate) fn format_timestamp(ts: &NaiveDateTime) -> String {
    ts.format("%Y-%m-%d %H:%M:%S").to_string()
}

pub(crate) fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    let raw = raw.trim();
    NaiveDateTime::parse_from_str(raw, "%Y-%m-%d %H:%M:%S")
        .or_else(|_| NaiveDateTime::parse_from_str(raw, "%Y-%m-%dT%H:%M:%S"))
        .or_else(|_| NaiveDateTime::parse_from_str(raw, "%Y-%m-%dT%H:%M:%S%.f"))
        .or_else(|_| NaiveDateTime::parse_from_str(raw, "%Y-%m-%d %H:%M:%S%.f"))
        .ok()
}
