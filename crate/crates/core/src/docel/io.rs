//! Directory-of-CSV storage: `manifest.json`, `events.csv`,
//! `objects_<Type>.csv` and `dynamic_<Attribute>.csv`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::validate::{validate_log, Issue, IssueCode};
use super::{
    format_timestamp, parse_timestamp, AttributeValue, DocelError, DocelLog, DynamicAttributeRecord,
    Event, ObjectInstance, ObjectTypeSchema, LogSchema, ValueKind,
};

const EVENT_COLUMNS: [&str; 3] = ["event_id", "activity", "timestamp"];
const DYNAMIC_COLUMNS: [&str; 4] = ["record_id", "value", "event_id", "object_id"];

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    object_types: Vec<ManifestObjectType>,
    #[serde(default)]
    dynamic_attributes: Vec<ManifestDynamic>,
    #[serde(default)]
    event_attributes: Vec<ManifestAttribute>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ManifestObjectType {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    file: Option<String>,
    #[serde(default)]
    static_attributes: Vec<ManifestAttribute>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ManifestAttribute {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kind: Option<ValueKind>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ManifestDynamic {
    name: String,
    object_type: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kind: Option<ValueKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    file: Option<String>,
}

fn file_stem(name: &str) -> String {
    name.chars().filter(|c| c.is_ascii_alphanumeric() || *c == '_' || *c == '-').collect()
}

fn objects_file(object_type: &str) -> String {
    format!("objects_{}.csv", file_stem(object_type))
}

/// File names for dynamic attributes; the owning type is appended when two
/// types declare the same attribute.
fn dynamic_files(schema: &LogSchema) -> BTreeMap<(String, String), String> {
    let mut by_stem: BTreeMap<String, usize> = BTreeMap::new();
    for ot in schema.object_types.values() {
        for at in ot.dynamic_attributes.keys() {
            *by_stem.entry(file_stem(at)).or_default() += 1;
        }
    }
    let mut out = BTreeMap::new();
    for (tname, ot) in &schema.object_types {
        for at in ot.dynamic_attributes.keys() {
            let stem = file_stem(at);
            let file = if by_stem[&stem] > 1 {
                format!("dynamic_{stem}_{}.csv", file_stem(tname))
            } else {
                format!("dynamic_{stem}.csv")
            };
            out.insert((tname.clone(), at.clone()), file);
        }
    }
    out
}

fn io_err(path: &Path, source: std::io::Error) -> DocelError {
    DocelError::Io { path: path.display().to_string(), source }
}

fn csv_err(file: &str, e: csv::Error) -> DocelError {
    DocelError::Malformed { location: file.to_string(), message: e.to_string() }
}

fn schema_mismatch(location: impl Into<String>, message: impl Into<String>) -> DocelError {
    Issue::new(IssueCode::SchemaMismatch, location, message).into()
}

/// A parsed log together with non-fatal findings.
#[derive(Debug, Clone)]
pub struct LoadedLog {
    pub log: DocelLog,
    pub warnings: Vec<Issue>,
}

/// Reads a log directory; any validation error aborts the read.
pub fn parse_docel(dir: impl AsRef<Path>) -> Result<DocelLog, DocelError> {
    read_docel(dir).map(|l| l.log)
}

struct Table {
    file: String,
    header: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

fn read_table(dir: &Path, file: &str) -> Result<Table, DocelError> {
    let path = dir.join(file);
    if !path.is_file() {
        return Err(DocelError::MissingFile(file.to_string()));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(&path)
        .map_err(|e| csv_err(file, e))?;
    let header = rdr
        .headers()
        .map_err(|e| csv_err(file, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let rows = rdr
        .records()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| csv_err(file, e))?;
    Ok(Table { file: file.to_string(), header, rows })
}

impl Table {
    fn location(&self, row: usize) -> String {
        // header is line 1
        format!("{} row {}", self.file, row + 2)
    }

    fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    fn cells<'a>(&'a self, col: usize) -> impl Iterator<Item = &'a str> + 'a {
        self.rows.iter().map(move |r| r.get(col).unwrap_or(""))
    }

    fn check_columns(&self, fixed: &[&str], declared: &BTreeSet<String>) -> Result<(), DocelError> {
        if self.header.len() < fixed.len()
            || self.header.iter().zip(fixed).any(|(h, f)| h != f)
        {
            return Err(schema_mismatch(
                &self.file,
                format!("header must start with {}", fixed.join(",")),
            ));
        }
        let rest: BTreeSet<String> = self.header[fixed.len()..].iter().cloned().collect();
        if rest.len() != self.header.len() - fixed.len() || &rest != declared {
            let extra: Vec<_> = rest.difference(declared).cloned().collect();
            let missing: Vec<_> = declared.difference(&rest).cloned().collect();
            return Err(schema_mismatch(
                &self.file,
                format!("column set differs from manifest (extra {extra:?}, missing {missing:?})"),
            ));
        }
        Ok(())
    }
}

fn resolve_kind(
    declared: Option<ValueKind>,
    name: &str,
    cells: impl IntoIterator<Item = impl AsRef<str>>,
    warnings: &mut Vec<Issue>,
) -> ValueKind {
    declared.unwrap_or_else(|| {
        let cells: Vec<String> = cells.into_iter().map(|c| c.as_ref().to_string()).collect();
        let kind = AttributeValue::infer_kind(cells.iter().map(String::as_str));
        warnings.push(Issue::new(
            IssueCode::SchemaMismatch,
            "manifest.json",
            format!("no kind declared for {name}, inferred {}", kind.as_str()),
        ));
        kind
    })
}

fn parse_cell(kind: ValueKind, raw: &str, location: String, name: &str) -> Result<AttributeValue, DocelError> {
    AttributeValue::parse(kind, raw).ok_or_else(|| {
        Issue::new(
            IssueCode::InvalidValue,
            location,
            format!("{name}: cannot read {raw:?} as {}", kind.as_str()),
        )
        .into()
    })
}

pub fn read_docel(dir: impl AsRef<Path>) -> Result<LoadedLog, DocelError> {
    let dir = dir.as_ref();
    let events_table = read_table(dir, "events.csv")?;
    let manifest_path = dir.join("manifest.json");
    if !manifest_path.is_file() {
        return Err(DocelError::MissingFile("manifest.json".into()));
    }
    let text = fs::read_to_string(&manifest_path).map_err(|e| io_err(&manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| DocelError::Malformed {
        location: "manifest.json".into(),
        message: e.to_string(),
    })?;
    if manifest.object_types.is_empty() {
        return Err(schema_mismatch("manifest.json", "no object types declared"));
    }

    let mut warnings = Vec::new();
    let mut schema = LogSchema::default();
    let mut objects = Vec::new();
    let mut seen_objects = BTreeSet::new();

    for mt in &manifest.object_types {
        if schema.object_types.contains_key(&mt.name) {
            return Err(Issue::new(
                IssueCode::DuplicateId,
                "manifest.json",
                format!("object type {} declared twice", mt.name),
            )
            .into());
        }
        let file = mt.file.clone().unwrap_or_else(|| objects_file(&mt.name));
        let table = read_table(dir, &file)?;
        let declared: BTreeSet<String> = mt.static_attributes.iter().map(|a| a.name.clone()).collect();
        table.check_columns(&["object_id"], &declared)?;
        let mut ot_schema = ObjectTypeSchema::default();
        let mut cols = Vec::new();
        for a in &mt.static_attributes {
            let col = table.column(&a.name).expect("checked above");
            let kind = resolve_kind(a.kind, &a.name, table.cells(col), &mut warnings);
            ot_schema.static_attributes.insert(a.name.clone(), kind);
            cols.push((a.name.clone(), col, kind));
        }
        for (i, row) in table.rows.iter().enumerate() {
            let id = row.get(0).unwrap_or("").to_string();
            if id.is_empty() {
                return Err(schema_mismatch(table.location(i), "empty object_id"));
            }
            if !seen_objects.insert(id.clone()) {
                return Err(Issue::new(
                    IssueCode::DuplicateId,
                    table.location(i),
                    format!("object {id} declared twice"),
                )
                .into());
            }
            let mut statics = BTreeMap::new();
            for (name, col, kind) in &cols {
                let raw = row.get(*col).unwrap_or("");
                if raw.is_empty() {
                    continue;
                }
                statics.insert(name.clone(), parse_cell(*kind, raw, table.location(i), name)?);
            }
            objects.push(ObjectInstance {
                object_id: id.into(),
                object_type: mt.name.clone(),
                static_attributes: statics,
            });
        }
        schema.object_types.insert(mt.name.clone(), ot_schema);
    }

    let mut declared: BTreeSet<String> = schema.object_types.keys().cloned().collect();
    for a in &manifest.event_attributes {
        if !declared.insert(a.name.clone()) {
            return Err(schema_mismatch(
                "manifest.json",
                format!("event attribute {} clashes with an object type", a.name),
            ));
        }
    }
    events_table.check_columns(&EVENT_COLUMNS, &declared)?;
    for a in &manifest.event_attributes {
        let col = events_table.column(&a.name).expect("checked above");
        let kind = resolve_kind(a.kind, &a.name, events_table.cells(col), &mut warnings);
        schema.event_attributes.insert(a.name.clone(), kind);
    }

    let mut events = Vec::with_capacity(events_table.rows.len());
    for (i, row) in events_table.rows.iter().enumerate() {
        let loc = events_table.location(i);
        let id = row.get(0).unwrap_or("");
        if id.is_empty() {
            return Err(schema_mismatch(loc, "empty event_id"));
        }
        let ts_raw = row.get(2).unwrap_or("");
        let ts = parse_timestamp(ts_raw).ok_or_else(|| {
            DocelError::from(Issue::new(
                IssueCode::InvalidValue,
                loc.clone(),
                format!("bad timestamp {ts_raw:?}"),
            ))
        })?;
        let mut event = Event::new(id, row.get(1).unwrap_or(""), ts);
        for (col, name) in events_table.header.iter().enumerate().skip(EVENT_COLUMNS.len()) {
            let raw = row.get(col).unwrap_or("");
            if schema.object_types.contains_key(name) {
                for o in raw.split(';').map(str::trim).filter(|s| !s.is_empty()) {
                    event = event.with_object(name, o);
                }
            } else if !raw.is_empty() {
                let kind = schema.event_attributes[name];
                event = event.with_attribute(name, parse_cell(kind, raw, loc.clone(), name)?);
            }
        }
        events.push(event);
    }

    let mut records = Vec::new();
    for md in &manifest.dynamic_attributes {
        let Some(ot) = schema.object_types.get_mut(&md.object_type) else {
            return Err(schema_mismatch(
                "manifest.json",
                format!("dynamic attribute {} owned by undeclared type {}", md.name, md.object_type),
            ));
        };
        if ot.static_attributes.contains_key(&md.name) || ot.dynamic_attributes.contains_key(&md.name) {
            return Err(schema_mismatch(
                "manifest.json",
                format!("attribute {} declared twice for {}", md.name, md.object_type),
            ));
        }
        // a placeholder kind keeps dynamic_files() stable before reading
        ot.dynamic_attributes.insert(md.name.clone(), md.kind.unwrap_or(ValueKind::Categorical));
    }
    let default_files = dynamic_files(&schema);
    for md in &manifest.dynamic_attributes {
        let file = md
            .file
            .clone()
            .unwrap_or_else(|| default_files[&(md.object_type.clone(), md.name.clone())].clone());
        let table = read_table(dir, &file)?;
        table.check_columns(&DYNAMIC_COLUMNS, &BTreeSet::new())?;
        let kind = resolve_kind(md.kind, &md.name, table.cells(1), &mut warnings);
        schema
            .object_types
            .get_mut(&md.object_type)
            .expect("checked above")
            .dynamic_attributes
            .insert(md.name.clone(), kind);
        for (i, row) in table.rows.iter().enumerate() {
            let loc = table.location(i);
            let get = |c: usize| row.get(c).unwrap_or("").to_string();
            let record_id = get(0);
            if record_id.is_empty() {
                return Err(schema_mismatch(loc, "empty record_id"));
            }
            records.push(DynamicAttributeRecord {
                record_id,
                attribute: md.name.clone(),
                value: parse_cell(kind, &get(1), loc, &md.name)?,
                event_id: get(2).into(),
                object_id: get(3).into(),
            });
        }
    }

    let log = DocelLog::new(schema, objects, events, records);
    let report = validate_log(&log);
    if let Some(issue) = report.errors.into_iter().next() {
        return Err(issue.into());
    }
    warnings.extend(report.warnings);
    Ok(LoadedLog { log, warnings })
}

fn manifest_of(log: &DocelLog) -> Manifest {
    let schema = log.schema();
    let files = dynamic_files(schema);
    let attrs = |m: &BTreeMap<String, ValueKind>| {
        m.iter()
            .map(|(n, k)| ManifestAttribute { name: n.clone(), kind: Some(*k) })
            .collect()
    };
    Manifest {
        object_types: schema
            .object_types
            .iter()
            .map(|(name, ot)| ManifestObjectType {
                name: name.clone(),
                file: Some(objects_file(name)),
                static_attributes: attrs(&ot.static_attributes),
            })
            .collect(),
        dynamic_attributes: schema
            .object_types
            .iter()
            .flat_map(|(tname, ot)| {
                let files = &files;
                ot.dynamic_attributes.iter().map(move |(n, k)| ManifestDynamic {
                    name: n.clone(),
                    object_type: tname.clone(),
                    kind: Some(*k),
                    file: Some(files[&(tname.clone(), n.clone())].clone()),
                })
            })
            .collect(),
        event_attributes: attrs(&schema.event_attributes),
    }
}

/// Serializes the log into (file name, bytes) pairs in a fixed order.
fn render(log: &DocelLog) -> Result<Vec<(String, Vec<u8>)>, csv::Error> {
    let schema = log.schema();
    let mut out = Vec::new();
    let mut manifest = serde_json::to_string_pretty(&manifest_of(log)).expect("manifest serializes");
    manifest.push('\n');
    out.push(("manifest.json".to_string(), manifest.into_bytes()));

    let mut w = csv::Writer::from_writer(Vec::new());
    let types: Vec<&String> = schema.object_types.keys().collect();
    let eattrs: Vec<&String> = schema.event_attributes.keys().collect();
    let mut header: Vec<&str> = EVENT_COLUMNS.to_vec();
    header.extend(types.iter().map(|s| s.as_str()));
    header.extend(eattrs.iter().map(|s| s.as_str()));
    w.write_record(&header)?;
    for e in log.events() {
        let mut row = vec![e.event_id.to_string(), e.activity.clone(), format_timestamp(&e.timestamp)];
        for t in &types {
            row.push(
                e.object_refs
                    .get(*t)
                    .map(|ids| ids.iter().map(|o| o.as_str()).collect::<Vec<_>>().join(";"))
                    .unwrap_or_default(),
            );
        }
        for a in &eattrs {
            row.push(e.event_attributes.get(*a).map(|v| v.to_string()).unwrap_or_default());
        }
        w.write_record(&row)?;
    }
    out.push(("events.csv".to_string(), w.into_inner().expect("in-memory writer")));

    for (tname, ot) in &schema.object_types {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["object_id"];
        header.extend(ot.static_attributes.keys().map(String::as_str));
        w.write_record(&header)?;
        for o in log.objects_of_type(tname) {
            let mut row = vec![o.object_id.to_string()];
            for a in ot.static_attributes.keys() {
                row.push(o.static_attributes.get(a).map(|v| v.to_string()).unwrap_or_default());
            }
            w.write_record(&row)?;
        }
        out.push((objects_file(tname), w.into_inner().expect("in-memory writer")));
    }

    for ((tname, at), file) in dynamic_files(schema) {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(DYNAMIC_COLUMNS)?;
        for r in log.dynamic_records().iter().filter(|r| {
            r.attribute == at
                && log.object(r.object_id.as_str()).map(|o| o.object_type.as_str()) == Some(tname.as_str())
        }) {
            w.write_record([
                r.record_id.as_str(),
                &r.value.to_string(),
                r.event_id.as_str(),
                r.object_id.as_str(),
            ])?;
        }
        out.push((file, w.into_inner().expect("in-memory writer")));
    }
    Ok(out)
}

pub fn write_docel(log: &DocelLog, dir: impl AsRef<Path>) -> Result<(), DocelError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let files = render(log).map_err(|e| csv_err("<render>", e))?;
    for (name, bytes) in files {
        let path = dir.join(&name);
        fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
    }
    Ok(())
}

/// SHA-256 over the canonical on-disk form of the log, hex encoded.
pub fn log_fingerprint(log: &DocelLog) -> String {
    let mut h = Sha256::new();
    for (name, bytes) in render(log).expect("in-memory csv cannot fail") {
        h.update(name.as_bytes());
        h.update([0u8]);
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
