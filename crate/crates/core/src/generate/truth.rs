use crate::docel::AttributeValue;
use crate::shift::Ataots;

use super::{PublicationParams, ShippingParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Process {
    Publication,
    Shipping,
}

/// One input test of a table row.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Any,
    Is(AttributeValue),
    /// Numeric range, lower bound inclusive and upper bound exclusive.
    Range(Option<f64>, Option<f64>),
}

impl Cell {
    pub fn matches(&self, v: &AttributeValue) -> bool {
        match self {
            Cell::Any => true,
            Cell::Is(x) => x == v,
            Cell::Range(lo, hi) => v.as_f64().is_some_and(|x| {
                lo.map_or(true, |l| x >= l) && hi.map_or(true, |h| x < h)
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Value(AttributeValue),
    /// The first input times a constant.
    Product(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub cells: Vec<Cell>,
    pub outcome: Outcome,
}

/// A first-hit decision table.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTable {
    pub output: Ataots,
    pub inputs: Vec<Ataots>,
    pub rows: Vec<TableRow>,
}

impl DecisionTable {
    pub fn evaluate(&self, inputs: &[AttributeValue]) -> Option<AttributeValue> {
        let row = self
            .rows
            .iter()
            .find(|r| r.cells.iter().zip(inputs).all(|(c, v)| c.matches(v)))?;
        match &row.outcome {
            Outcome::Value(v) => Some(v.clone()),
            Outcome::Product(k) => inputs.first()?.as_f64().map(|x| AttributeValue::Numeric(x * k)),
        }
    }
}

/// Edges and decision tables a generator embeds.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthSpec {
    pub process: Process,
    /// (input, output)
    pub drd_edges: Vec<(Ataots, Ataots)>,
    pub rules: Vec<DecisionTable>,
}

impl GroundTruthSpec {
    pub fn table(&self, output: &Ataots) -> Option<&DecisionTable> {
        self.rules.iter().find(|t| &t.output == output)
    }
}

fn row(cells: Vec<Cell>, outcome: &str) -> TableRow {
    TableRow { cells, outcome: Outcome::Value(AttributeValue::categorical(outcome)) }
}

fn is(s: &str) -> Cell {
    Cell::Is(AttributeValue::categorical(s))
}

/// Parameters are taken from `publication` or `shipping` according to
/// `process`; the other one is ignored.
pub fn ground_truth(process: Process, publication: &PublicationParams, shipping: &ShippingParams) -> GroundTruthSpec {
    match process {
        Process::Publication => publication_truth(publication),
        Process::Shipping => shipping_truth(shipping),
    }
}

fn publication_truth(p: &PublicationParams) -> GroundTruthSpec {
    let score = Ataots::new("Review Score", "Read manuscript", "Books", 1);
    let published = Ataots::new("Number of published books", "Find inspiration", "Authors", 1);
    let quality = Ataots::new("Quality", "Determine book quality", "Books", 1);
    let compliance = Ataots::new("Compliance", "Read manuscript details", "Books", 1);
    let status = Ataots::new("Publication Status", "Decide on publication", "Books", 1);
    let t = p.publication_threshold as f64;
    let quality_table = DecisionTable {
        output: quality.clone(),
        inputs: vec![score.clone(), published.clone()],
        rows: vec![
            row(vec![Cell::Range(Some(8.0), None), Cell::Range(Some(t), None)], "Excellent"),
            row(vec![Cell::Any, Cell::Range(Some(t), None)], "Average"),
            row(vec![Cell::Range(None, Some(6.0)), Cell::Any], "Bad"),
            row(vec![Cell::Range(None, Some(8.0)), Cell::Any], "Average"),
            row(vec![Cell::Any, Cell::Any], "Excellent"),
        ],
    };
    let yes = Cell::Is(AttributeValue::Boolean(true));
    let status_table = DecisionTable {
        output: status.clone(),
        inputs: vec![quality.clone(), compliance.clone()],
        rows: vec![
            row(vec![is("Excellent"), yes.clone()], "Yes"),
            row(vec![is("Average"), yes], "Revise"),
            row(vec![Cell::Any, Cell::Any], "No"),
        ],
    };
    GroundTruthSpec {
        process: Process::Publication,
        drd_edges: vec![
            (score, quality.clone()),
            (published, quality.clone()),
            (quality, status.clone()),
            (compliance, status),
        ],
        rules: vec![quality_table, status_table],
    }
}

fn shipping_truth(p: &ShippingParams) -> GroundTruthSpec {
    let quantity = Ataots::new("Quantity", "Place order", "Orders", 1);
    let value = Ataots::new("Order Value", "Calculate order value", "Orders", 1);
    let importance = Ataots::new("Importance", "Place order", "Customers", 1);
    let refund = Ataots::new("Refund", "Place order", "Orders", 1);
    let method = Ataots::new("Shipping Method", "Determine shipping method", "Orders", 1);
    let value_table = DecisionTable {
        output: value.clone(),
        inputs: vec![quantity.clone()],
        rows: vec![TableRow { cells: vec![Cell::Any], outcome: Outcome::Product(p.product_value) }],
    };
    let method_table = DecisionTable {
        output: method.clone(),
        inputs: vec![value.clone(), importance.clone(), refund.clone()],
        rows: vec![
            row(vec![Cell::Any, Cell::Any, Cell::Is(AttributeValue::Boolean(true))], "Express Courier"),
            row(vec![Cell::Any, is("High"), Cell::Any], "Courier"),
            row(vec![Cell::Range(Some(p.order_value_threshold), None), Cell::Any, Cell::Any], "Courier"),
            row(vec![Cell::Any, Cell::Any, Cell::Any], "Mail"),
        ],
    };
    GroundTruthSpec {
        process: Process::Shipping,
        drd_edges: vec![
            (quantity, value.clone()),
            (value, method.clone()),
            (importance, method.clone()),
            (refund, method),
        ],
        rules: vec![value_table, method_table],
    }
}
