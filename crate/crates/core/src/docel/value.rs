use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

/// Kind of an attribute as declared in the log manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    Numeric,
    Categorical,
    Boolean,
    Text,
}

impl ValueKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ValueKind::Numeric => "numeric",
            ValueKind::Categorical => "categorical",
            ValueKind::Boolean => "boolean",
            ValueKind::Text => "text",
        }
    }
}

/// A scalar attribute value. Numeric values are always finite.
#[derive(Debug, Clone)]
pub enum AttributeValue {
    Numeric(f64),
    Categorical(String),
    Boolean(bool),
    Text(String),
}

impl AttributeValue {
    pub fn kind(&self) -> ValueKind {
        match self {
            AttributeValue::Numeric(_) => ValueKind::Numeric,
            AttributeValue::Categorical(_) => ValueKind::Categorical,
            AttributeValue::Boolean(_) => ValueKind::Boolean,
            AttributeValue::Text(_) => ValueKind::Text,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            AttributeValue::Numeric(v) => Some(*v),
            _ => None,
        }
    }

    pub fn categorical(s: impl Into<String>) -> Self {
        AttributeValue::Categorical(s.into())
    }

    /// Parses a CSV cell according to the declared kind.
    pub fn parse(kind: ValueKind, raw: &str) -> Option<Self> {
        match kind {
            ValueKind::Numeric => raw
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(AttributeValue::Numeric),
            ValueKind::Boolean => match raw.trim() {
                "True" | "true" | "TRUE" | "1" => Some(AttributeValue::Boolean(true)),
                "False" | "false" | "FALSE" | "0" => Some(AttributeValue::Boolean(false)),
                _ => None,
            },
            ValueKind::Categorical => {
                if raw.is_empty() {
                    None
                } else {
                    Some(AttributeValue::Categorical(raw.to_string()))
                }
            }
            ValueKind::Text => Some(AttributeValue::Text(raw.to_string())),
        }
    }

    /// Guesses a kind from a column of raw cells.
    pub fn infer_kind<'a>(cells: impl IntoIterator<Item = &'a str>) -> ValueKind {
        let cells: Vec<&str> = cells.into_iter().filter(|c| !c.is_empty()).collect();
        if cells.is_empty() {
            return ValueKind::Categorical;
        }
        let all = |k: ValueKind| cells.iter().all(|c| Self::parse(k, c).is_some());
        if cells
            .iter()
            .all(|c| matches!(c.trim(), "True" | "False" | "true" | "false"))
        {
            ValueKind::Boolean
        } else if all(ValueKind::Numeric) {
            ValueKind::Numeric
        } else {
            ValueKind::Categorical
        }
    }

    fn rank(&self) -> u8 {
        match self {
            AttributeValue::Numeric(_) => 0,
            AttributeValue::Categorical(_) => 1,
            AttributeValue::Boolean(_) => 2,
            AttributeValue::Text(_) => 3,
        }
    }
}

impl fmt::Display for AttributeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttributeValue::Numeric(v) => write!(f, "{v}"),
            AttributeValue::Categorical(s) | AttributeValue::Text(s) => f.write_str(s),
            AttributeValue::Boolean(true) => f.write_str("True"),
            AttributeValue::Boolean(false) => f.write_str("False"),
        }
    }
}

impl PartialEq for AttributeValue {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for AttributeValue {}

impl PartialOrd for AttributeValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for AttributeValue {
    fn cmp(&self, other: &Self) -> Ordering {
        use AttributeValue::*;
        match (self, other) {
            (Numeric(a), Numeric(b)) => a.total_cmp(b),
            (Categorical(a), Categorical(b)) | (Text(a), Text(b)) => a.cmp(b),
            (Boolean(a), Boolean(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl Hash for AttributeValue {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            AttributeValue::Numeric(v) => v.to_bits().hash(state),
            AttributeValue::Categorical(s) | AttributeValue::Text(s) => s.hash(state),
            AttributeValue::Boolean(b) => b.hash(state),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_declared_kinds() {
        assert_eq!(
            AttributeValue::parse(ValueKind::Numeric, "150"),
            Some(AttributeValue::Numeric(150.0))
        );
        assert_eq!(AttributeValue::parse(ValueKind::Numeric, "inf"), None);
        assert_eq!(
            AttributeValue::parse(ValueKind::Boolean, "True"),
            Some(AttributeValue::Boolean(true))
        );
        assert_eq!(AttributeValue::parse(ValueKind::Categorical, ""), None);
    }

    #[test]
    fn display_round_trips_numeric() {
        for v in [0.1, 150.0, -3.25, 1e-7, 123456789.125] {
            let s = AttributeValue::Numeric(v).to_string();
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn infers_kinds() {
        assert_eq!(AttributeValue::infer_kind(["1", "2.5"]), ValueKind::Numeric);
        assert_eq!(AttributeValue::infer_kind(["True", "False"]), ValueKind::Boolean);
        assert_eq!(AttributeValue::infer_kind(["High", "3"]), ValueKind::Categorical);
    }
}
