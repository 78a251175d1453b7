use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{accuracy_on, check_dataset, grow_tree, DecisionTree, LearnerConfig};
use super::{EncodedDataset, MlError, TargetKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub feature_subsample: usize,
    pub seed: u64,
    pub target_kind: TargetKind,
    pub n_classes: usize,
}

impl RandomForest {
    pub fn predict(&self, x: &[f64]) -> f64 {
        match self.target_kind {
            TargetKind::Classification => {
                let mut votes = vec![0usize; self.n_classes.max(1)];
                for t in &self.trees {
                    votes[t.predict(x) as usize] += 1;
                }
                let mut best = 0;
                for (c, &v) in votes.iter().enumerate() {
                    if v > votes[best] {
                        best = c;
                    }
                }
                best as f64
            }
            TargetKind::Regression => {
                self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
            }
        }
    }
}

pub fn train_random_forest(ds: &EncodedDataset, cfg: &LearnerConfig) -> Result<RandomForest, MlError> {
    check_dataset(ds)?;
    if cfg.n_trees == 0 {
        return Err(MlError::InvalidConfig("n_trees must be at least 1".into()));
    }
    let mtry = cfg.max_features.resolve(ds.n_features());
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let seeds: Vec<u64> = (0..cfg.n_trees).map(|_| master.gen()).collect();
    let n = ds.len();
    let trees = seeds
        .par_iter()
        .map(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let rows: Vec<usize> = if cfg.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow_tree(ds, cfg, rows, mtry, Some(&mut rng))
        })
        .collect();
    Ok(RandomForest {
        trees,
        feature_subsample: mtry,
        seed: cfg.seed,
        target_kind: ds.target_kind,
        n_classes: ds.n_classes(),
    })
}

/// Assigns each row to one of `k` folds; classes are spread evenly over the
/// folds for classification targets.
pub fn fold_assignment(ds: &EncodedDataset, k: usize, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_f01d);
    let mut fold = vec![0; ds.len()];
    let groups: Vec<Vec<usize>> = match ds.target_kind {
        TargetKind::Classification => {
            let mut g = vec![Vec::new(); ds.n_classes().max(1)];
            for (i, y) in ds.target.iter().enumerate() {
                g[*y as usize].push(i);
            }
            g
        }
        TargetKind::Regression => vec![(0..ds.len()).collect()],
    };
    let mut next = 0;
    for mut g in groups {
        g.shuffle(&mut rng);
        for i in g {
            fold[i] = next % k;
            next += 1;
        }
    }
    fold
}

/// Mean k-fold accuracy of a forest trained with `cfg`. Regression
/// predictions count as correct within `cfg.regression_tolerance` relative error.
pub fn evaluate_accuracy(cfg: &LearnerConfig, ds: &EncodedDataset, folds: usize) -> Result<f64, MlError> {
    check_dataset(ds)?;
    if folds < 2 || ds.len() < folds {
        return Err(MlError::TooFewSamples { needed: folds.max(2), got: ds.len() });
    }
    let assignment = fold_assignment(ds, folds, cfg.seed);
    let mut scores = Vec::new();
    for f in 0..folds {
        let (test, train): (Vec<usize>, Vec<usize>) = (0..ds.len()).partition(|&i| assignment[i] == f);
        if test.is_empty() {
            continue;
        }
        let forest = train_random_forest(&ds.subset(&train), cfg)?;
        scores.push(accuracy_on(|x| forest.predict(x), ds, &test, cfg.regression_tolerance));
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}
