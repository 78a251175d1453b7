//! Synthetic DOCEL logs for the book publication and shipping processes, each
//! with the decision logic it embeds.

mod publication;
mod shipping;
mod truth;

use chrono::{Duration, NaiveDateTime};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use publication::{generate_publication_log, publication_outcome, quality_of, PublicationParams};
pub use shipping::{generate_shipping_log, shipping_method, ShippingParams};
pub use truth::{ground_truth, Cell, DecisionTable, GroundTruthSpec, Outcome, Process, TableRow};

use crate::docel::{AttributeValue, DocelError, Event, LogBuilder, ObjectId};

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Log(#[from] DocelError),
}

impl GenerateError {
    pub fn code(&self) -> &'static str {
        match self {
            GenerateError::InvalidParams(_) => "InvalidParams",
            GenerateError::Log(e) => e.code(),
        }
    }
}

fn check(ok: bool, msg: &str) -> Result<(), GenerateError> {
    if ok {
        Ok(())
    } else {
        Err(GenerateError::InvalidParams(msg.to_string()))
    }
}

/// One pending event of a case.
#[derive(Debug, Clone)]
struct Step {
    activity: &'static str,
    objects: Vec<(&'static str, ObjectId)>,
    records: Vec<(&'static str, ObjectId, AttributeValue)>,
    attributes: Vec<(&'static str, AttributeValue)>,
}

impl Step {
    fn new(activity: &'static str, objects: &[(&'static str, &ObjectId)]) -> Self {
        Step {
            activity,
            objects: objects.iter().map(|(t, o)| (*t, (*o).clone())).collect(),
            records: Vec::new(),
            attributes: Vec::new(),
        }
    }

    fn set(mut self, attribute: &'static str, object: &ObjectId, value: AttributeValue) -> Self {
        self.records.push((attribute, object.clone(), value));
        self
    }

    fn attr(mut self, name: &'static str, value: AttributeValue) -> Self {
        self.attributes.push((name, value));
        self
    }
}

/// A case is a queue of steps; `then` is released once the case finishes.
struct Case {
    steps: std::collections::VecDeque<Step>,
    then: Option<Box<Case>>,
}

impl Case {
    fn new(steps: Vec<Step>) -> Self {
        Case { steps: steps.into(), then: None }
    }
}

/// Interleaves cases at random on one clock that advances by a random
/// interval before every event, so timestamps are strictly increasing.
fn schedule(
    builder: &mut LogBuilder,
    mut cases: Vec<Case>,
    start: NaiveDateTime,
    interval: (u64, u64),
    rng: &mut ChaCha8Rng,
) {
    let mut clock = start;
    let mut events = 0usize;
    let mut records = 0usize;
    while !cases.is_empty() {
        let k = rng.gen_range(0..cases.len());
        let step = cases[k].steps.pop_front().expect("active cases have steps");
        clock += Duration::seconds(rng.gen_range(interval.0..=interval.1) as i64);
        events += 1;
        let eid = format!("e{events}");
        let mut event = Event::new(eid.as_str(), step.activity, clock);
        for (t, o) in &step.objects {
            event = event.with_object(t, o.clone());
        }
        for (name, v) in step.attributes {
            event = event.with_attribute(name, v);
        }
        builder.event(event);
        for (at, o, v) in step.records {
            records += 1;
            builder.record(format!("r{records}"), at, v, eid.as_str(), o);
        }
        if cases[k].steps.is_empty() {
            let done = cases.swap_remove(k);
            if let Some(next) = done.then {
                cases.push(*next);
            }
        }
    }
}
