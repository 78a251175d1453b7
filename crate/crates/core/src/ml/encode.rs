use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::MlError;
use crate::docel::{AttributeValue, ValueKind};

/// How a column maps between attribute values and numbers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FeatureEncoding {
    Numeric,
    Boolean,
    /// Sorted labels; a label's code is its index.
    Labels { labels: Vec<String> },
}

impl FeatureEncoding {
    pub fn encode(&self, v: &AttributeValue) -> Option<f64> {
        match (self, v) {
            (FeatureEncoding::Numeric, AttributeValue::Numeric(x)) => Some(*x),
            (FeatureEncoding::Boolean, AttributeValue::Boolean(b)) => Some(if *b { 1.0 } else { 0.0 }),
            (FeatureEncoding::Labels { labels }, AttributeValue::Categorical(s) | AttributeValue::Text(s)) => {
                labels.binary_search(s).ok().map(|i| i as f64)
            }
            _ => None,
        }
    }

    pub fn decode(&self, x: f64) -> Option<AttributeValue> {
        match self {
            FeatureEncoding::Numeric => Some(AttributeValue::Numeric(x)),
            FeatureEncoding::Boolean => match x {
                x if x == 0.0 => Some(AttributeValue::Boolean(false)),
                x if x == 1.0 => Some(AttributeValue::Boolean(true)),
                _ => None,
            },
            FeatureEncoding::Labels { labels } => {
                if x.fract() != 0.0 || x < 0.0 {
                    return None;
                }
                labels.get(x as usize).map(|s| AttributeValue::Categorical(s.clone()))
            }
        }
    }

    /// Decoded values whose codes fall in the half-open interval (lower, upper].
    pub fn codes_in(&self, lower: Option<f64>, upper: Option<f64>) -> Vec<AttributeValue> {
        let n = match self {
            FeatureEncoding::Numeric => return Vec::new(),
            FeatureEncoding::Boolean => 2,
            FeatureEncoding::Labels { labels } => labels.len(),
        };
        (0..n)
            .map(|c| c as f64)
            .filter(|c| lower.map_or(true, |l| *c > l) && upper.map_or(true, |u| *c <= u))
            .filter_map(|c| self.decode(c))
            .collect()
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, FeatureEncoding::Numeric)
    }

    pub fn n_classes(&self) -> usize {
        match self {
            FeatureEncoding::Numeric => 0,
            FeatureEncoding::Boolean => 2,
            FeatureEncoding::Labels { labels } => labels.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Classification,
    Regression,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDataset {
    pub rows: Vec<Vec<f64>>,
    /// Class index (classification) or value (regression).
    pub target: Vec<f64>,
    pub feature_names: Vec<String>,
    pub encodings: Vec<FeatureEncoding>,
    pub target_name: String,
    pub target_encoding: FeatureEncoding,
    pub target_kind: TargetKind,
}

impl EncodedDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_classes(&self) -> usize {
        match self.target_kind {
            TargetKind::Classification => self.target_encoding.n_classes(),
            TargetKind::Regression => 0,
        }
    }

    pub fn subset(&self, idx: &[usize]) -> EncodedDataset {
        EncodedDataset {
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            target: idx.iter().map(|&i| self.target[i]).collect(),
            ..self.clone_schema()
        }
    }

    fn clone_schema(&self) -> EncodedDataset {
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

    /// Encodes one raw row with this dataset's feature encodings.
    pub fn encode_row(&self, raw: &BTreeMap<String, AttributeValue>) -> Option<Vec<f64>> {
        self.feature_names
            .iter()
            .zip(&self.encodings)
            .map(|(name, enc)| raw.get(name).and_then(|v| enc.encode(v)))
            .collect()
    }
}

fn encoding_for(name: &str, values: &[&AttributeValue]) -> Result<FeatureEncoding, MlError> {
    let kinds: BTreeSet<ValueKind> = values
        .iter()
        .map(|v| match v.kind() {
            ValueKind::Text => ValueKind::Categorical,
            k => k,
        })
        .collect();
    if kinds.len() > 1 {
        return Err(MlError::MixedKinds(name.to_string()));
    }
    Ok(match kinds.into_iter().next() {
        Some(ValueKind::Numeric) => FeatureEncoding::Numeric,
        Some(ValueKind::Boolean) => FeatureEncoding::Boolean,
        _ => {
            let labels: BTreeSet<String> = values.iter().map(|v| v.to_string()).collect();
            FeatureEncoding::Labels { labels: labels.into_iter().collect() }
        }
    })
}

/// Builds a numeric dataset. Features are every attribute except `target`,
/// in name order.
pub fn encode_features(
    raw_rows: &[BTreeMap<String, AttributeValue>],
    target: &str,
) -> Result<EncodedDataset, MlError> {
    let first = raw_rows.first().ok_or(MlError::EmptyDataset)?;
    let names: Vec<String> = first.keys().filter(|k| k.as_str() != target).cloned().collect();
    if !first.contains_key(target) {
        return Err(MlError::MissingAttribute(target.to_string()));
    }
    for row in raw_rows {
        if row.len() != first.len() || !row.keys().eq(first.keys()) {
            return Err(MlError::InconsistentRows);
        }
    }
    let column = |name: &str| -> Vec<&AttributeValue> { raw_rows.iter().map(|r| &r[name]).collect() };
    let encodings = names
        .iter()
        .map(|n| encoding_for(n, &column(n)))
        .collect::<Result<Vec<_>, _>>()?;
    let target_encoding = encoding_for(target, &column(target))?;
    let target_kind = if target_encoding.is_numeric() {
        TargetKind::Regression
    } else {
        TargetKind::Classification
    };
    let rows = raw_rows
        .iter()
        .map(|r| {
            names
                .iter()
                .zip(&encodings)
                .map(|(n, e)| e.encode(&r[n]).expect("encoding built from these values"))
                .collect()
        })
        .collect();
    let target_values = raw_rows
        .iter()
        .map(|r| target_encoding.encode(&r[target]).expect("encoding built from these values"))
        .collect();
    Ok(EncodedDataset {
        rows,
        target: target_values,
        feature_names: names,
        encodings,
        target_name: target.to_string(),
        target_encoding,
        target_kind,
    })
}
