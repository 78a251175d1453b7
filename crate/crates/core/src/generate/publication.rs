use chrono::{NaiveDate, NaiveDateTime};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check, schedule, Case, GenerateError, Step};
use crate::docel::{AttributeValue, DocelLog, LogBuilder, LogSchema, ObjectId, ObjectTypeSchema, ValueKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublicationParams {
    pub max_authors: usize,
    /// Upper bound of an author's number of published books.
    pub max_published_books: u32,
    pub genre_list: Vec<String>,
    pub max_publishers: usize,
    pub num_books: usize,
    pub start_time: NaiveDateTime,
    /// Seconds between consecutive events, inclusive.
    pub event_interval: (u64, u64),
    /// Chance that a manuscript is compliant.
    pub prob_compliance: f64,
    pub publication_threshold: u32,
    pub rng_seed: u64,
}

impl Default for PublicationParams {
    fn default() -> Self {
        PublicationParams {
            max_authors: 100,
            max_published_books: 9,
            genre_list: ["Fantasy", "Romance", "Thriller", "Mystery", "Science Fiction"]
                .map(String::from)
                .to_vec(),
            max_publishers: 100,
            num_books: 100,
            start_time: NaiveDate::from_ymd_opt(2022, 1, 1)
                .unwrap()
                .and_hms_opt(10, 0, 0)
                .unwrap(),
            event_interval: (1, 600),
            prob_compliance: 0.7,
            publication_threshold: 5,
            rng_seed: 42,
        }
    }
}

impl PublicationParams {
    fn validate(&self) -> Result<(), GenerateError> {
        check(self.max_authors >= 1 && self.max_publishers >= 1 && self.num_books >= 1, "counts must be at least 1")?;
        check(!self.genre_list.is_empty(), "genre_list is empty")?;
        check((0.0..=1.0).contains(&self.prob_compliance), "prob_compliance must lie in [0, 1]")?;
        check(self.event_interval.0 >= 1 && self.event_interval.0 <= self.event_interval.1, "event_interval must be a range of at least one second")
    }
}

/// Quality from the review score and the author's track record.
pub fn quality_of(review_score: u32, published_books: u32, threshold: u32) -> &'static str {
    if published_books >= threshold {
        if review_score >= 8 {
            "Excellent"
        } else {
            "Average"
        }
    } else if review_score <= 5 {
        "Bad"
    } else if review_score <= 7 {
        "Average"
    } else {
        "Excellent"
    }
}

pub fn publication_outcome(quality: &str, compliant: bool) -> &'static str {
    match (quality, compliant) {
        ("Excellent", true) => "Yes",
        ("Average", true) => "Revise",
        _ => "No",
    }
}

fn schema() -> LogSchema {
    let mut authors = ObjectTypeSchema::default();
    authors.static_attributes.insert("Name".into(), ValueKind::Text);
    authors.static_attributes.insert("Author Specialty Genre".into(), ValueKind::Categorical);
    authors.static_attributes.insert("Number of published books".into(), ValueKind::Numeric);
    let mut books = ObjectTypeSchema::default();
    books.static_attributes.insert("Genre".into(), ValueKind::Categorical);
    books.static_attributes.insert("Number of pages".into(), ValueKind::Numeric);
    for (name, kind) in [
        ("Publication Status", ValueKind::Categorical),
        ("Review Score", ValueKind::Numeric),
        ("Quality", ValueKind::Categorical),
        ("Compliance", ValueKind::Boolean),
    ] {
        books.dynamic_attributes.insert(name.into(), kind);
    }
    let mut publishers = ObjectTypeSchema::default();
    publishers.static_attributes.insert("Name".into(), ValueKind::Text);
    publishers.static_attributes.insert("Publisher Specialty Genre".into(), ValueKind::Categorical);
    let mut schema = LogSchema::default();
    schema.object_types.insert("Authors".into(), authors);
    schema.object_types.insert("Books".into(), books);
    schema.object_types.insert("Publishers".into(), publishers);
    schema
}

/// Every book runs through the same eight activities; books share authors and
/// publishers round-robin.
pub fn generate_publication_log(p: &PublicationParams) -> Result<DocelLog, GenerateError> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.rng_seed);
    let genre = |rng: &mut ChaCha8Rng| AttributeValue::categorical(p.genre_list.choose(rng).expect("non-empty").as_str());
    let mut b = LogBuilder::new(schema());
    let mut published = Vec::with_capacity(p.max_authors);
    for i in 1..=p.max_authors {
        let books = rng.gen_range(0..=p.max_published_books);
        published.push(books);
        b.object(
            format!("a{i}"),
            "Authors",
            [
                ("Name".to_string(), AttributeValue::Text(format!("Author {i}"))),
                ("Author Specialty Genre".to_string(), genre(&mut rng)),
                ("Number of published books".to_string(), AttributeValue::Numeric(books as f64)),
            ],
        );
    }
    for i in 1..=p.max_publishers {
        b.object(
            format!("p{i}"),
            "Publishers",
            [
                ("Name".to_string(), AttributeValue::Text(format!("Publisher {i}"))),
                ("Publisher Specialty Genre".to_string(), genre(&mut rng)),
            ],
        );
    }
    let mut cases = Vec::with_capacity(p.num_books);
    for i in 0..p.num_books {
        let bk = ObjectId::from(format!("b{}", i + 1));
        let au = ObjectId::from(format!("a{}", i % p.max_authors + 1));
        let pu = ObjectId::from(format!("p{}", i % p.max_publishers + 1));
        b.object(
            bk.clone(),
            "Books",
            [
                ("Genre".to_string(), genre(&mut rng)),
                ("Number of pages".to_string(), AttributeValue::Numeric(rng.gen_range(100..=600) as f64)),
            ],
        );
        let compliant = rng.gen_bool(p.prob_compliance);
        let score = rng.gen_range(0..=10u32);
        let quality = quality_of(score, published[i % p.max_authors], p.publication_threshold);
        let outcome = publication_outcome(quality, compliant);
        let (a, bo, pb) = (("Authors", &au), ("Books", &bk), ("Publishers", &pu));
        cases.push(Case::new(vec![
            Step::new("Find inspiration", &[a]),
            Step::new("Write book", &[a, bo]),
            Step::new("Submit book manuscript", &[a, bo, pb])
                .set("Publication Status", &bk, AttributeValue::categorical("Pending")),
            Step::new("Read manuscript details", &[bo, pb]).set("Compliance", &bk, AttributeValue::Boolean(compliant)),
            Step::new("Read manuscript", &[bo, pb]).set("Review Score", &bk, AttributeValue::Numeric(score as f64)),
            Step::new("Determine book quality", &[a, bo, pb]).set("Quality", &bk, AttributeValue::categorical(quality)),
            Step::new("Decide on publication", &[a, bo, pb])
                .set("Publication Status", &bk, AttributeValue::categorical(outcome)),
            Step::new("Communicate decision", &[a, bo, pb]),
        ]));
    }
    schedule(&mut b, cases, p.start_time, p.event_interval, &mut rng);
    Ok(b.build()?)
}
