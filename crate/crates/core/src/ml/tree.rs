use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{EncodedDataset, MlError, TargetKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    All,
    Sqrt,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let k = match self {
            MaxFeatures::All => n_features,
            MaxFeatures::Sqrt => (n_features as f64).sqrt().ceil() as usize,
            MaxFeatures::Count(k) => k,
        };
        k.clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub max_features: MaxFeatures,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub cv_folds: usize,
    /// Relative tolerance for counting a regression prediction as correct.
    pub regression_tolerance: f64,
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            n_trees: 100,
            bootstrap: true,
            max_features: MaxFeatures::Sqrt,
            max_depth: None,
            min_samples_leaf: 1,
            cv_folds: 5,
            regression_tolerance: 0.05,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        samples: usize,
    },
    Leaf {
        /// Class index or mean value.
        value: f64,
        samples: usize,
        /// Per-class counts; empty for regression.
        #[serde(default)]
        distribution: Vec<usize>,
    },
}

impl TreeNode {
    pub fn samples(&self) -> usize {
        match self {
            TreeNode::Split { samples, .. } | TreeNode::Leaf { samples, .. } => *samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    /// Node 0 is the root.
    pub nodes: Vec<TreeNode>,
    pub depth: usize,
    pub training_accuracy: f64,
    pub target_kind: TargetKind,
    pub n_classes: usize,
}

impl DecisionTree {
    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Split { feature, threshold, left, right, .. } => {
                    i = if x[*feature] <= *threshold { *left } else { *right };
                }
                TreeNode::Leaf { .. } => return i,
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        match &self.nodes[self.leaf_index(x)] {
            TreeNode::Leaf { value, .. } => *value,
            TreeNode::Split { .. } => unreachable!("leaf_index stops at leaves"),
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }
}

pub(crate) fn is_correct(kind: TargetKind, tolerance: f64, predicted: f64, actual: f64) -> bool {
    match kind {
        TargetKind::Classification => predicted == actual,
        TargetKind::Regression => {
            if actual == 0.0 {
                predicted.abs() <= 1e-9
            } else {
                (predicted - actual).abs() <= tolerance * actual.abs()
            }
        }
    }
}

pub(crate) fn accuracy_on(
    predict: impl Fn(&[f64]) -> f64,
    ds: &EncodedDataset,
    idx: &[usize],
    tolerance: f64,
) -> f64 {
    if idx.is_empty() {
        return 0.0;
    }
    let hits = idx
        .iter()
        .filter(|&&i| is_correct(ds.target_kind, tolerance, predict(&ds.rows[i]), ds.target[i]))
        .count();
    hits as f64 / idx.len() as f64
}

const MIN_GAIN: f64 = 1e-12;

struct Builder<'a, R> {
    ds: &'a EncodedDataset,
    cfg: &'a LearnerConfig,
    mtry: usize,
    rng: Option<&'a mut R>,
    nodes: Vec<TreeNode>,
    depth: usize,
}

struct Best {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl<'a, R: Rng> Builder<'a, R> {
    fn impurity(&self, idx: &[usize]) -> f64 {
        match self.ds.target_kind {
            TargetKind::Classification => {
                let counts = self.class_counts(idx);
                gini(&counts, idx.len())
            }
            TargetKind::Regression => {
                let (s, s2) = idx.iter().fold((0.0, 0.0), |(s, s2), &i| {
                    let y = self.ds.target[i];
                    (s + y, s2 + y * y)
                });
                variance(s, s2, idx.len())
            }
        }
    }

    fn class_counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.ds.n_classes().max(1)];
        for &i in idx {
            counts[self.ds.target[i] as usize] += 1;
        }
        counts
    }

    fn leaf(&mut self, idx: &[usize]) -> usize {
        let node = match self.ds.target_kind {
            TargetKind::Classification => {
                let counts = self.class_counts(idx);
                // first maximum wins, i.e. the lowest class index
                let mut best = 0;
                for (c, &n) in counts.iter().enumerate() {
                    if n > counts[best] {
                        best = c;
                    }
                }
                TreeNode::Leaf { value: best as f64, samples: idx.len(), distribution: counts }
            }
            TargetKind::Regression => {
                let mean = idx.iter().map(|&i| self.ds.target[i]).sum::<f64>() / idx.len() as f64;
                TreeNode::Leaf { value: mean, samples: idx.len(), distribution: Vec::new() }
            }
        };
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    fn best_split_on(&self, feature: usize, idx: &mut [usize], parent: f64) -> Option<Best> {
        let ds = self.ds;
        idx.sort_by(|&a, &b| ds.rows[a][feature].total_cmp(&ds.rows[b][feature]));
        let n = idx.len();
        let min_leaf = self.cfg.min_samples_leaf.max(1);
        let mut best: Option<Best> = None;
        match ds.target_kind {
            TargetKind::Classification => {
                let total = self.class_counts(idx);
                let mut left = vec![0usize; total.len()];
                for k in 0..n - 1 {
                    left[ds.target[idx[k]] as usize] += 1;
                    let (a, b) = (ds.rows[idx[k]][feature], ds.rows[idx[k + 1]][feature]);
                    let nl = k + 1;
                    if a == b || nl < min_leaf || n - nl < min_leaf {
                        continue;
                    }
                    let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
                    let weighted = (nl as f64 * gini(&left, nl) + (n - nl) as f64 * gini(&right, n - nl)) / n as f64;
                    consider(&mut best, feature, midpoint(a, b), parent - weighted);
                }
            }
            TargetKind::Regression => {
                let (ts, ts2) = idx.iter().fold((0.0, 0.0), |(s, s2), &i| {
                    let y = ds.target[i];
                    (s + y, s2 + y * y)
                });
                let (mut ls, mut ls2) = (0.0, 0.0);
                for k in 0..n - 1 {
                    let y = ds.target[idx[k]];
                    ls += y;
                    ls2 += y * y;
                    let (a, b) = (ds.rows[idx[k]][feature], ds.rows[idx[k + 1]][feature]);
                    let nl = k + 1;
                    if a == b || nl < min_leaf || n - nl < min_leaf {
                        continue;
                    }
                    let weighted = (nl as f64 * variance(ls, ls2, nl)
                        + (n - nl) as f64 * variance(ts - ls, ts2 - ls2, n - nl))
                        / n as f64;
                    consider(&mut best, feature, midpoint(a, b), parent - weighted);
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: &mut Vec<usize>, depth: usize) -> usize {
        self.depth = self.depth.max(depth);
        let parent = self.impurity(idx);
        let stop = idx.len() < 2 * self.cfg.min_samples_leaf.max(1)
            || parent <= MIN_GAIN
            || self.cfg.max_depth.is_some_and(|d| depth >= d);
        if stop {
            return self.leaf(idx);
        }
        let n_features = self.ds.n_features();
        let mut order: Vec<usize> = (0..n_features).collect();
        if self.mtry < n_features {
            if let Some(rng) = self.rng.as_deref_mut() {
                order.shuffle(rng);
            }
        }
        let mut best: Option<Best> = None;
        let mut visited = 0;
        for f in order {
            if visited >= self.mtry {
                break;
            }
            let first = self.ds.rows[idx[0]][f];
            if idx.iter().all(|&i| self.ds.rows[i][f] == first) {
                continue;
            }
            visited += 1;
            if let Some(b) = self.best_split_on(f, idx, parent) {
                if best.as_ref().map_or(true, |cur| b.gain > cur.gain + MIN_GAIN) {
                    best = Some(b);
                }
            }
        }
        // zero-gain splits are allowed so that XOR-like targets can be separated
        let Some(best) = best else {
            return self.leaf(idx);
        };
        let (mut left, mut right): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.ds.rows[i][best.feature] <= best.threshold);
        let me = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { value: 0.0, samples: 0, distribution: Vec::new() });
        let l = self.grow(&mut left, depth + 1);
        let r = self.grow(&mut right, depth + 1);
        self.nodes[me] = TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: l,
            right: r,
            samples: idx.len(),
        };
        me
    }
}

fn consider(best: &mut Option<Best>, feature: usize, threshold: f64, gain: f64) {
    if best.as_ref().map_or(true, |b| gain > b.gain + MIN_GAIN) {
        *best = Some(Best { feature, threshold, gain });
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b {
        a
    } else {
        m
    }
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

fn variance(s: f64, s2: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    (s2 / n - (s / n).powi(2)).max(0.0)
}

/// Grows one tree on the given row indices (repeats allowed).
pub(crate) fn grow_tree<R: Rng>(
    ds: &EncodedDataset,
    cfg: &LearnerConfig,
    rows: Vec<usize>,
    mtry: usize,
    rng: Option<&mut R>,
) -> DecisionTree {
    let mut b = Builder { ds, cfg, mtry, rng, nodes: Vec::new(), depth: 0 };
    let mut idx = rows;
    b.grow(&mut idx, 0);
    let mut tree = DecisionTree {
        nodes: b.nodes,
        depth: b.depth,
        training_accuracy: 0.0,
        target_kind: ds.target_kind,
        n_classes: ds.n_classes(),
    };
    idx.sort_unstable();
    idx.dedup();
    tree.training_accuracy = accuracy_on(|x| tree.predict(x), ds, &idx, cfg.regression_tolerance);
    tree
}

fn check(ds: &EncodedDataset) -> Result<(), MlError> {
    if ds.is_empty() {
        return Err(MlError::EmptyDataset);
    }
    if ds.n_features() == 0 {
        return Err(MlError::NoFeatures);
    }
    Ok(())
}

/// CART on all rows and all features.
pub fn train_decision_tree(ds: &EncodedDataset, cfg: &LearnerConfig) -> Result<DecisionTree, MlError> {
    check(ds)?;
    Ok(grow_tree::<rand_chacha::ChaCha8Rng>(ds, cfg, (0..ds.len()).collect(), ds.n_features(), None))
}

pub(crate) fn check_dataset(ds: &EncodedDataset) -> Result<(), MlError> {
    check(ds)
}
