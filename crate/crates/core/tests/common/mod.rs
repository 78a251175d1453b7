#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use ocdm::docel::{
    AttributeValue, DocelLog, Event, LogBuilder, LogSchema, ObjectTypeSchema, ValueKind,
};
use proptest::prelude::*;

/// The thirteen-event publication snippet with its Publication Status table,
/// restricted to records whose events are part of the snippet.
pub const SNIPPET_EVENTS: &str = "\
event_id,activity,timestamp,Authors,Books,Publishers
e1,Find inspiration,2022-01-01 10:53:45,a951,,
e2,Find inspiration,2022-01-01 10:59:42,a155,,
e3,Write book,2022-01-01 11:00:30,a951,b2,
e4,Submit book manuscript,2022-01-01 11:08:23,a951,b2,p90
e5,Write book,2022-01-01 11:08:32,a155,b3,
e6,Read manuscript details,2022-01-01 11:17:26,,b2,p90
e7,Submit book manuscript,2022-01-01 11:18:13,a155,b3,p86
e8,Read manuscript details,2022-01-01 11:22:06,,b3,p86
e9,Read manuscript,2022-01-01 11:27:06,,b2,p90
e10,Read manuscript,2022-01-01 11:31:22,,b3,p86
e11,Determine book quality,2022-01-01 11:36:09,a951,b2,p90
e12,Determine book quality,2022-01-01 11:36:51,a155,b3,p86
e13, Decide on publication, 2022-01-01 11:38:02, , b3, p86
";

pub const SNIPPET_STATUS: &str = "\
record_id,value,event_id,object_id
ps3,Pending,e4,b2
ps5,Pending,e7,b3
ps6,Revise,e13,b3
";

pub const SNIPPET_AUTHORS: &str = "\
object_id,Name
a155,Jane Roe
a951,John Doe
";

pub const SNIPPET_BOOKS: &str = "\
object_id,Genre
b2,Fantasy
b3,Romance
";

pub const SNIPPET_PUBLISHERS: &str = "\
object_id,Name,Publisher Specialty Genre
p44,Source Industries Universal Publishing,Romance
p86,Telecom Electronics Publishing,Romance
p90,Studio West Software Publishing,Fantasy
";

pub const SNIPPET_MANIFEST: &str = r#"{
  "object_types": [
    {"name": "Authors", "static_attributes": [{"name": "Name", "kind": "text"}]},
    {"name": "Books", "static_attributes": [{"name": "Genre", "kind": "categorical"}]},
    {"name": "Publishers", "static_attributes": [
      {"name": "Name", "kind": "text"},
      {"name": "Publisher Specialty Genre", "kind": "categorical"}
    ]}
  ],
  "dynamic_attributes": [
    {"name": "Publication Status", "object_type": "Books", "kind": "categorical"}
  ]
}"#;

pub fn write_snippet(dir: &Path) {
    fs::write(dir.join("manifest.json"), SNIPPET_MANIFEST).unwrap();
    fs::write(dir.join("events.csv"), SNIPPET_EVENTS).unwrap();
    fs::write(dir.join("objects_Authors.csv"), SNIPPET_AUTHORS).unwrap();
    fs::write(dir.join("objects_Books.csv"), SNIPPET_BOOKS).unwrap();
    fs::write(dir.join("objects_Publishers.csv"), SNIPPET_PUBLISHERS).unwrap();
    fs::write(dir.join("dynamic_PublicationStatus.csv"), SNIPPET_STATUS).unwrap();
}

pub fn snippet_log() -> DocelLog {
    let dir = tempfile::tempdir().unwrap();
    write_snippet(dir.path());
    ocdm::docel::parse_docel(dir.path()).unwrap()
}

/// Raw material for a small random log: object count, and per event an
/// activity, a coarse timestamp (ties are likely), a mask of referenced
/// objects, a mask of objects whose attribute changes, and a value seed.
#[derive(Debug, Clone)]
pub struct ToyPlan {
    pub n_objects: usize,
    pub events: Vec<(u8, u8, u16, u16, u8)>,
}

pub fn toy_plan() -> impl Strategy<Value = ToyPlan> {
    (1usize..=10).prop_flat_map(|n| {
        let full = (1u16 << n) - 1;
        (
            Just(n),
            prop::collection::vec((0u8..3, 0u8..6, 1u16..=full, 0u16..=full, 0u8..4), 1..16),
        )
            .prop_map(|(n_objects, events)| ToyPlan { n_objects, events })
    })
}

/// Objects alternate between types `P` (static `s`, dynamic `x`) and `Q`
/// (dynamic `y`).
pub fn toy_log(plan: &ToyPlan) -> DocelLog {
    let mut schema = LogSchema::default();
    let mut p = ObjectTypeSchema::default();
    p.static_attributes.insert("s".into(), ValueKind::Categorical);
    p.dynamic_attributes.insert("x".into(), ValueKind::Numeric);
    let mut q = ObjectTypeSchema::default();
    q.dynamic_attributes.insert("y".into(), ValueKind::Categorical);
    schema.object_types.insert("P".into(), p);
    schema.object_types.insert("Q".into(), q);
    let ty = |i: usize| if i % 2 == 0 { "P" } else { "Q" };
    let mut b = LogBuilder::new(schema);
    for i in 0..plan.n_objects {
        let statics: BTreeMap<String, AttributeValue> = if ty(i) == "P" {
            [("s".to_string(), AttributeValue::categorical(format!("v{}", i % 3)))].into()
        } else {
            BTreeMap::new()
        };
        b.object(format!("o{i}"), ty(i), statics);
    }
    let base = NaiveDate::from_ymd_opt(2022, 1, 1).unwrap().and_hms_opt(10, 0, 0).unwrap();
    let mut rec = 0;
    for (k, (act, ts, mask, rmask, val)) in plan.events.iter().enumerate() {
        let id = format!("e{k}");
        let mut e = Event::new(
            id.as_str(),
            ["A", "B", "C"][*act as usize],
            base + chrono::Duration::seconds(*ts as i64),
        );
        for i in 0..plan.n_objects {
            if mask & (1 << i) != 0 {
                e = e.with_object(ty(i), format!("o{i}"));
                if rmask & (1 << i) != 0 {
                    rec += 1;
                    let (at, v) = if ty(i) == "P" {
                        ("x", AttributeValue::Numeric(*val as f64))
                    } else {
                        ("y", AttributeValue::categorical(format!("c{val}")))
                    };
                    b.record(format!("r{rec}"), at, v, id.as_str(), format!("o{i}"));
                }
            }
        }
        b.event(e);
    }
    b.build().expect("toy logs are valid by construction")
}

/// Orders go through Register, Assess and Ship. Importance is static, Noise
/// is a random number set at Assess, Method is set at Ship (Fast iff the
/// order is High), and Archive copies Method into Label afterwards.
pub fn gated_log(n: usize, seed: u64) -> DocelLog {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut schema = LogSchema::default();
    let mut orders = ObjectTypeSchema::default();
    orders.static_attributes.insert("Importance".into(), ValueKind::Categorical);
    orders.dynamic_attributes.insert("Noise".into(), ValueKind::Numeric);
    orders.dynamic_attributes.insert("Method".into(), ValueKind::Categorical);
    orders.dynamic_attributes.insert("Label".into(), ValueKind::Categorical);
    schema.object_types.insert("Orders".into(), orders);
    let mut b = LogBuilder::new(schema);
    let base = NaiveDate::from_ymd_opt(2022, 1, 1).unwrap().and_hms_opt(8, 0, 0).unwrap();
    let mut clock = 0i64;
    for i in 0..n {
        let o = format!("o{i}");
        let high = rng.gen_bool(0.5);
        let imp = if high { "High" } else { "Low" };
        b.object(o.as_str(), "Orders", [("Importance".to_string(), AttributeValue::categorical(imp))]);
        let method = if high { "Fast" } else { "Slow" };
        for (k, act) in ["Register", "Assess", "Ship", "Archive"].iter().enumerate() {
            clock += 1;
            let eid = format!("e{i}_{k}");
            b.event(Event::new(eid.as_str(), *act, base + chrono::Duration::seconds(clock)).with_object("Orders", o.as_str()));
            let rec = format!("r{i}_{k}");
            match *act {
                "Assess" => {
                    let v = AttributeValue::Numeric(rng.gen_range(0..100) as f64);
                    b.record(rec, "Noise", v, eid.as_str(), o.as_str());
                }
                "Ship" => {
                    b.record(rec, "Method", AttributeValue::categorical(method), eid.as_str(), o.as_str());
                }
                "Archive" => {
                    b.record(rec, "Label", AttributeValue::categorical(method), eid.as_str(), o.as_str());
                }
                _ => {}
            }
        }
    }
    b.build().unwrap()
}

/// Replays every ground-truth table over the log: for each object with an
/// output shift, the inputs are read from co-occurring objects and the table
/// outcome is compared to the logged value. Returns (checked, mismatches).
pub fn replay(log: &DocelLog, truth: &ocdm::generate::GroundTruthSpec) -> (usize, usize) {
    use ocdm::discovery::related_objects;
    use ocdm::shift::build_shift_index;
    let index = build_shift_index(log);
    let (mut checked, mut bad) = (0, 0);
    for table in &truth.rules {
        let Some(series) = index.series_for(&table.output) else { continue };
        for o in series.keys() {
            let Some(out) = index.nth_shift(&table.output, o.as_str()) else { continue };
            let mut inputs = Vec::new();
            for node in &table.inputs {
                let related = related_objects(&index, log, o.as_str(), &node.object_type).unwrap();
                let values: Vec<AttributeValue> = related
                    .iter()
                    .filter_map(|o2| index.nth_shift(node, o2.as_str()).map(|s| s.value.clone()))
                    .collect();
                assert_eq!(values.len(), 1, "{node} for {o}");
                inputs.push(values[0].clone());
            }
            checked += 1;
            if table.evaluate(&inputs).as_ref() != Some(&out.value) {
                bad += 1;
            }
        }
    }
    (checked, bad)
}

/// Normalized mutual information straight from a contingency table.
pub fn table_nmi(table: &[Vec<usize>]) -> f64 {
    let n: usize = table.iter().flatten().sum();
    let n = n as f64;
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum::<usize>() as f64).collect();
    let cols: Vec<f64> = (0..table[0].len())
        .map(|j| table.iter().map(|r| r[j]).sum::<usize>() as f64)
        .collect();
    let h = |m: &[f64]| -> f64 { m.iter().filter(|&&c| c > 0.0).map(|&c| -(c / n) * (c / n).ln()).sum() };
    let (hx, hy) = (h(&rows), h(&cols));
    if hx == 0.0 || hy == 0.0 {
        return 0.0;
    }
    let mut mi = 0.0;
    for (i, r) in table.iter().enumerate() {
        for (j, &c) in r.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (rows[i] * cols[j])).ln();
            }
        }
    }
    mi / hx.max(hy)
}

pub fn samples(table: &[Vec<usize>]) -> (Vec<AttributeValue>, Vec<AttributeValue>) {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (i, r) in table.iter().enumerate() {
        for (j, &c) in r.iter().enumerate() {
            for _ in 0..c {
                x.push(AttributeValue::categorical(format!("r{i}")));
                y.push(AttributeValue::categorical(format!("c{j}")));
            }
        }
    }
    (x, y)
}

pub type Naive = BTreeMap<(String, String, String), Vec<String>>;

/// Quadratic reference: for each attribute change scan the whole event list.
pub fn naive_shifts(log: &DocelLog) -> Naive {
    let mut out: Naive = BTreeMap::new();
    for r in log.dynamic_records() {
        for e in log.events() {
            if e.event_id == r.event_id {
                out.entry((r.attribute.clone(), e.activity.clone(), r.object_id.to_string()))
                    .or_default()
                    .push(e.event_id.to_string());
            }
        }
    }
    for o in log.objects().values() {
        let first = log.events().iter().find(|e| e.references(&o.object_id));
        if let Some(e) = first {
            for at in o.static_attributes.keys() {
                out.entry((at.clone(), e.activity.clone(), o.object_id.to_string()))
                    .or_default()
                    .push(e.event_id.to_string());
            }
        }
    }
    for list in out.values_mut() {
        list.sort_by_key(|id| log.events().iter().position(|e| e.event_id.as_str() == id));
    }
    out
}

pub fn indexed_shifts(log: &DocelLog) -> Naive {
    let idx = ocdm::shift::build_shift_index(log);
    let mut out = BTreeMap::new();
    for (at, act, ot) in idx.series_keys() {
        for o in log.objects_of_type(ot) {
            let list = idx.shifts(at, act, o.object_id.as_str());
            if !list.is_empty() {
                out.insert(
                    (at.to_string(), act.to_string(), o.object_id.to_string()),
                    list.iter().map(|e| e.event_id.to_string()).collect(),
                );
            }
        }
    }
    out
}
