use std::collections::BTreeMap;

use chrono::{NaiveDate, NaiveDateTime};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check, schedule, Case, GenerateError, Step};
use crate::docel::{AttributeValue, DocelLog, LogBuilder, LogSchema, ObjectId, ObjectTypeSchema, ValueKind};

pub const ACTIVITIES: [&str; 8] = [
    "Place order",
    "Calculate order value",
    "Check customer importance",
    "Determine shipping method",
    "Pack order",
    "Ship order",
    "Deliver order",
    "Receive payment",
];

pub const REFUND_ACTIVITY: &str = "Pay refund";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShippingParams {
    pub product_value: f64,
    pub num_customers: usize,
    /// Who may perform each activity; activities without a list get no
    /// Resource attribute.
    pub resource_lists: BTreeMap<String, Vec<String>>,
    pub start_time: NaiveDateTime,
    /// Seconds between consecutive events, inclusive.
    pub event_interval: (u64, u64),
    pub order_value_threshold: f64,
    pub num_orders: usize,
    pub prob_refund: f64,
    pub max_order_quantity: u32,
    /// Chance that a customer is of High importance.
    pub prob_high_importance: f64,
    pub rng_seed: u64,
}

impl Default for ShippingParams {
    fn default() -> Self {
        let staff = |names: &[&str]| names.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let resource_lists = BTreeMap::from([
            ("Place order".to_string(), staff(&["Web shop"])),
            ("Calculate order value".to_string(), staff(&["Alice", "Bob"])),
            ("Check customer importance".to_string(), staff(&["Alice", "Bob"])),
            ("Determine shipping method".to_string(), staff(&["Carol", "Dave"])),
            ("Pack order".to_string(), staff(&["Erin", "Frank", "Grace"])),
            ("Ship order".to_string(), staff(&["Erin", "Frank", "Grace"])),
            ("Deliver order".to_string(), staff(&["Ivan", "Judy"])),
            ("Receive payment".to_string(), staff(&["Heidi"])),
            ("Pay refund".to_string(), staff(&["Heidi"])),
        ]);
        ShippingParams {
            product_value: 40.0,
            num_customers: 50,
            resource_lists,
            start_time: NaiveDate::from_ymd_opt(2022, 1, 1)
                .unwrap()
                .and_hms_opt(9, 0, 0)
                .unwrap(),
            event_interval: (1, 600),
            order_value_threshold: 100.0,
            num_orders: 150,
            prob_refund: 0.33,
            max_order_quantity: 5,
            prob_high_importance: 0.4,
            rng_seed: 42,
        }
    }
}

impl ShippingParams {
    fn validate(&self) -> Result<(), GenerateError> {
        check(self.product_value > 0.0, "product_value must be positive")?;
        check(self.max_order_quantity >= 1, "max_order_quantity must be at least 1")?;
        check(self.num_customers >= 1 && self.num_orders >= 1, "counts must be at least 1")?;
        check((0.0..=1.0).contains(&self.prob_refund), "prob_refund must lie in [0, 1]")?;
        check((0.0..=1.0).contains(&self.prob_high_importance), "prob_high_importance must lie in [0, 1]")?;
        check(self.event_interval.0 >= 1 && self.event_interval.0 <= self.event_interval.1, "event_interval must be a range of at least one second")
    }
}

pub fn shipping_method(refund: bool, importance: &str, order_value: f64, threshold: f64) -> &'static str {
    if refund {
        "Express Courier"
    } else if importance == "High" || order_value >= threshold {
        "Courier"
    } else {
        "Mail"
    }
}

fn schema() -> LogSchema {
    let mut customers = ObjectTypeSchema::default();
    customers.static_attributes.insert("Name".into(), ValueKind::Text);
    customers.static_attributes.insert("Importance".into(), ValueKind::Categorical);
    let mut orders = ObjectTypeSchema::default();
    orders.static_attributes.insert("Refund".into(), ValueKind::Boolean);
    orders.dynamic_attributes.insert("Quantity".into(), ValueKind::Numeric);
    orders.dynamic_attributes.insert("Order Value".into(), ValueKind::Numeric);
    orders.dynamic_attributes.insert("Shipping Method".into(), ValueKind::Categorical);
    let mut products = ObjectTypeSchema::default();
    products.static_attributes.insert("Product Value".into(), ValueKind::Numeric);
    let mut schema = LogSchema::default();
    schema.object_types.insert("Customers".into(), customers);
    schema.object_types.insert("Orders".into(), orders);
    schema.object_types.insert("Products".into(), products);
    schema.event_attributes.insert("Resource".into(), ValueKind::Categorical);
    schema
}

/// Orders of a single product. An unsatisfied customer sends the package back
/// once; the return leg is its own order object with Refund set, runs through
/// the same activities and ends with a refund instead of a payment.
pub fn generate_shipping_log(p: &ShippingParams) -> Result<DocelLog, GenerateError> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.rng_seed);
    let mut b = LogBuilder::new(schema());
    let product = ObjectId::from("pr1");
    b.object(product.clone(), "Products", [("Product Value".to_string(), AttributeValue::Numeric(p.product_value))]);
    let mut importance = Vec::with_capacity(p.num_customers);
    for i in 1..=p.num_customers {
        let level = if rng.gen_bool(p.prob_high_importance) { "High" } else { "Low" };
        importance.push(level);
        b.object(
            format!("c{i}"),
            "Customers",
            [
                ("Name".to_string(), AttributeValue::Text(format!("Customer {i}"))),
                ("Importance".to_string(), AttributeValue::categorical(level)),
            ],
        );
    }
    let mut cases = Vec::with_capacity(p.num_orders);
    for i in 0..p.num_orders {
        let customer = ObjectId::from(format!("c{}", i % p.num_customers + 1));
        let level = importance[i % p.num_customers];
        let quantity = rng.gen_range(1..=p.max_order_quantity);
        let refund = rng.gen_bool(p.prob_refund);
        let order = ObjectId::from(format!("o{}", i + 1));
        let mut case = Case::new(leg(&mut b, &mut rng, p, &order, &customer, &product, quantity, level, false));
        if refund {
            let ret = ObjectId::from(format!("o{}-return", i + 1));
            case.then = Some(Box::new(Case::new(leg(&mut b, &mut rng, p, &ret, &customer, &product, quantity, level, true))));
        }
        cases.push(case);
    }
    schedule(&mut b, cases, p.start_time, p.event_interval, &mut rng);
    Ok(b.build()?)
}

#[allow(clippy::too_many_arguments)]
fn leg(
    b: &mut LogBuilder,
    rng: &mut ChaCha8Rng,
    p: &ShippingParams,
    order: &ObjectId,
    customer: &ObjectId,
    product: &ObjectId,
    quantity: u32,
    importance: &str,
    refund: bool,
) -> Vec<Step> {
    b.object(order.clone(), "Orders", [("Refund".to_string(), AttributeValue::Boolean(refund))]);
    let value = quantity as f64 * p.product_value;
    let method = shipping_method(refund, importance, value, p.order_value_threshold);
    let (c, o, pr) = (("Customers", customer), ("Orders", order), ("Products", product));
    let last = if refund { REFUND_ACTIVITY } else { ACTIVITIES[7] };
    let steps = vec![
        Step::new(ACTIVITIES[0], &[c, o, pr]).set("Quantity", order, AttributeValue::Numeric(quantity as f64)),
        Step::new(ACTIVITIES[1], &[o, pr]).set("Order Value", order, AttributeValue::Numeric(value)),
        Step::new(ACTIVITIES[2], &[c, o]),
        Step::new(ACTIVITIES[3], &[c, o]).set("Shipping Method", order, AttributeValue::categorical(method)),
        Step::new(ACTIVITIES[4], &[o]),
        Step::new(ACTIVITIES[5], &[o]),
        Step::new(ACTIVITIES[6], &[c, o]),
        Step::new(last, &[c, o]),
    ];
    steps
        .into_iter()
        .map(|s| match p.resource_lists.get(s.activity).and_then(|r| r.choose(rng)) {
            Some(r) => s.attr("Resource", AttributeValue::categorical(r.as_str())),
            None => s,
        })
        .collect()
}
