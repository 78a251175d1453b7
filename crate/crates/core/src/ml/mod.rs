//! Decision trees, random forests, feature encoding and rule extraction.

mod encode;
mod forest;
mod rules;
mod tree;

use thiserror::Error;

pub use encode::{encode_features, EncodedDataset, FeatureEncoding, TargetKind};
pub use forest::{evaluate_accuracy, fold_assignment, train_random_forest, RandomForest};
pub use rules::{outcome_label, tree_to_rules, Condition, Rule, RuleList};
pub use tree::{train_decision_tree, DecisionTree, LearnerConfig, MaxFeatures, TreeNode};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MlError {
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("dataset has no features")]
    NoFeatures,
    #[error("attribute {0} mixes value kinds")]
    MixedKinds(String),
    #[error("attribute {0} missing from rows")]
    MissingAttribute(String),
    #[error("rows do not share one attribute set")]
    InconsistentRows,
    #[error("need at least {needed} rows, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("invalid learner configuration: {0}")]
    InvalidConfig(String),
}

impl MlError {
    pub fn code(&self) -> &'static str {
        match self {
            MlError::EmptyDataset => "EmptyDataset",
            MlError::NoFeatures => "NoFeatures",
            MlError::MixedKinds(_) => "MixedKinds",
            MlError::MissingAttribute(_) => "MissingAttribute",
            MlError::InconsistentRows => "InconsistentRows",
            MlError::TooFewSamples { .. } => "TooFewSamples",
            MlError::InvalidConfig(_) => "InvalidConfig",
        }
    }
}
