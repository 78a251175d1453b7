use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::Serialize;

use super::{AttributeScope, AttributeValue, DocelLog, ValueKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum IssueCode {
    SchemaMismatch,
    DanglingForeignKey,
    DuplicateId,
    InvalidValue,
    UnreferencedObject,
    EmptyEvent,
    UnusedObject,
}

impl IssueCode {
    pub fn as_str(self) -> &'static str {
        match self {
            IssueCode::SchemaMismatch => "SchemaMismatch",
            IssueCode::DanglingForeignKey => "DanglingForeignKey",
            IssueCode::DuplicateId => "DuplicateId",
            IssueCode::InvalidValue => "InvalidValue",
            IssueCode::UnreferencedObject => "UnreferencedObject",
            IssueCode::EmptyEvent => "EmptyEvent",
            IssueCode::UnusedObject => "UnusedObject",
        }
    }
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub code: IssueCode,
    pub location: String,
    pub message: String,
}

impl Issue {
    pub fn new(code: IssueCode, location: impl Into<String>, message: impl Into<String>) -> Self {
        Issue { code, location: location.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }

    fn error(&mut self, code: IssueCode, location: String, message: String) {
        self.errors.push(Issue { code, location, message });
    }
}

fn check_value(value: &AttributeValue, kind: ValueKind) -> Option<String> {
    if value.kind() != kind {
        return Some(format!("expected {} value, found {}", kind.as_str(), value.kind().as_str()));
    }
    match value {
        AttributeValue::Numeric(v) if !v.is_finite() => Some("numeric value is not finite".into()),
        AttributeValue::Categorical(s) if s.is_empty() => Some("empty categorical label".into()),
        _ => None,
    }
}

/// Checks every structural invariant of the log and reports each violation.
pub fn validate_log(log: &DocelLog) -> ValidationReport {
    let mut report = ValidationReport::default();
    let schema = log.schema();

    for o in log.objects().values() {
        let loc = format!("object {}", o.object_id);
        let Some(ot) = schema.object_types.get(&o.object_type) else {
            report.error(
                IssueCode::SchemaMismatch,
                loc,
                format!("undeclared object type {}", o.object_type),
            );
            continue;
        };
        for (name, value) in &o.static_attributes {
            match ot.static_attributes.get(name) {
                None => report.error(
                    IssueCode::SchemaMismatch,
                    loc.clone(),
                    format!("{name} is not a static attribute of {}", o.object_type),
                ),
                Some(kind) => {
                    if let Some(msg) = check_value(value, *kind) {
                        report.error(IssueCode::InvalidValue, loc.clone(), format!("{name}: {msg}"));
                    }
                }
            }
        }
    }

    let mut event_ids = HashSet::new();
    let mut referenced = HashSet::new();
    for e in log.events() {
        let loc = format!("event {}", e.event_id);
        if !event_ids.insert(&e.event_id) {
            report.error(IssueCode::DuplicateId, loc.clone(), "event id used twice".into());
        }
        if e.object_refs.values().all(BTreeSet::is_empty) {
            report.error(IssueCode::EmptyEvent, loc.clone(), "event references no object".into());
        }
        for (ot, ids) in &e.object_refs {
            if !schema.object_types.contains_key(ot) {
                report.error(IssueCode::SchemaMismatch, loc.clone(), format!("undeclared object type {ot}"));
            }
            for id in ids {
                referenced.insert(id);
                match log.object(id.as_str()) {
                    None => report.error(
                        IssueCode::DanglingForeignKey,
                        loc.clone(),
                        format!("unknown object {id}"),
                    ),
                    Some(o) if &o.object_type != ot => report.error(
                        IssueCode::SchemaMismatch,
                        loc.clone(),
                        format!("object {id} has type {} but is listed under {ot}", o.object_type),
                    ),
                    Some(_) => {}
                }
            }
        }
        for (name, value) in &e.event_attributes {
            match schema.event_attributes.get(name) {
                None => report.error(
                    IssueCode::SchemaMismatch,
                    loc.clone(),
                    format!("undeclared event attribute {name}"),
                ),
                Some(kind) => {
                    if let Some(msg) = check_value(value, *kind) {
                        report.error(IssueCode::InvalidValue, loc.clone(), format!("{name}: {msg}"));
                    }
                }
            }
        }
    }

    let mut record_ids = HashSet::new();
    let mut triples = HashSet::new();
    for r in log.dynamic_records() {
        let loc = format!("record {} ({})", r.record_id, r.attribute);
        if !record_ids.insert((&r.attribute, &r.record_id)) {
            report.error(IssueCode::DuplicateId, loc.clone(), "record id used twice".into());
        }
        if !triples.insert((&r.attribute, &r.event_id, &r.object_id)) {
            report.error(
                IssueCode::DuplicateId,
                loc.clone(),
                format!("second change of {} for {} at {}", r.attribute, r.object_id, r.event_id),
            );
        }
        let event = log.event(r.event_id.as_str());
        if event.is_none() {
            report.error(IssueCode::DanglingForeignKey, loc.clone(), format!("unknown event {}", r.event_id));
        }
        let Some(object) = log.object(r.object_id.as_str()) else {
            report.error(IssueCode::DanglingForeignKey, loc, format!("unknown object {}", r.object_id));
            continue;
        };
        match schema.attribute(&object.object_type, &r.attribute) {
            Some(attr) if attr.scope == AttributeScope::Dynamic => {
                if let Some(msg) = check_value(&r.value, attr.kind) {
                    report.error(IssueCode::InvalidValue, loc.clone(), msg);
                }
            }
            _ => report.error(
                IssueCode::SchemaMismatch,
                loc.clone(),
                format!("{} is not a dynamic attribute of {}", r.attribute, object.object_type),
            ),
        }
        if let Some(e) = event {
            if !e.references(&r.object_id) {
                report.error(
                    IssueCode::UnreferencedObject,
                    loc,
                    format!("event {} does not reference {}", r.event_id, r.object_id),
                );
            }
        }
    }

    for id in log.objects().keys() {
        if !referenced.contains(id) {
            report.warnings.push(Issue::new(
                IssueCode::UnusedObject,
                format!("object {id}"),
                "object takes part in no event",
            ));
        }
    }
    report
}
