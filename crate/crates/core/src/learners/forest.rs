//! Gini decision trees and random forests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::seed::rng_for;
use super::tree::{grow_classifier, CartParams, Tree};
use super::{check_training, FeatureVector, LearnError, N_FEATURES};
use crate::ingest::Class;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

impl TreeConfig {
    fn check(&self) -> Result<(), LearnError> {
        if self.min_samples_split < 2 {
            return Err(LearnError::InvalidConfig("min_samples_split must be at least 2".into()));
        }
        Ok(())
    }
}

fn columns(x: &[FeatureVector]) -> Vec<[f64; N_FEATURES]> {
    x.iter().map(|v| v.0).collect()
}

fn is_high(y: &[Class]) -> Vec<bool> {
    y.iter().map(|c| *c == Class::High).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTreeModel {
    pub config: TreeConfig,
    pub tree: Tree,
}

impl DecisionTreeModel {
    /// Single-class input yields a constant predictor.
    pub fn fit(config: &TreeConfig, x: &[FeatureVector], y: &[Class]) -> Result<Self, LearnError> {
        config.check()?;
        check_training(x, y)?;
        let params = CartParams {
            max_depth: config.max_depth,
            min_samples_split: config.min_samples_split,
            max_features: N_FEATURES,
        };
        // the rng is never drawn from when every feature is examined
        let mut unused = ChaCha8Rng::seed_from_u64(0);
        let tree = grow_classifier(&columns(x), &is_high(y), &vec![1.0; x.len()], &params, &mut unused);
        Ok(Self {
            config: config.clone(),
            tree,
        })
    }

    pub(crate) fn proba(&self, x: &FeatureVector) -> f64 {
        self.tree.predict(&x.0)
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        self.tree.validate(Some((0.0, 1.0))).map_err(|e| format!("tree: {e}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub bootstrap: bool,
    /// Features drawn per split; the default is floor(sqrt(3)) = 1.
    pub max_features: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            bootstrap: true,
            max_features: 1,
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub config: ForestConfig,
    pub seed: u64,
    pub trees: Vec<Tree>,
}

impl RandomForestModel {
    /// Tree `t` draws its bootstrap sample and split features from its own
    /// stream of `seed`, so the forest is identical for any thread count.
    pub fn fit(config: &ForestConfig, x: &[FeatureVector], y: &[Class], seed: u64) -> Result<Self, LearnError> {
        if config.n_trees == 0 {
            return Err(LearnError::InvalidConfig("n_trees must be positive".into()));
        }
        if config.max_features == 0 {
            return Err(LearnError::InvalidConfig("max_features must be positive".into()));
        }
        TreeConfig {
            max_depth: config.max_depth,
            min_samples_split: config.min_samples_split,
        }
        .check()?;
        check_training(x, y)?;
        let cols = columns(x);
        let high = is_high(y);
        let params = CartParams {
            max_depth: config.max_depth,
            min_samples_split: config.min_samples_split,
            max_features: config.max_features,
        };
        let n = x.len();
        let trees = (0..config.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = rng_for(seed, t as u64);
                let mut weight = vec![0.0; n];
                if config.bootstrap {
                    for _ in 0..n {
                        weight[rng.random_range(0..n)] += 1.0;
                    }
                } else {
                    weight.fill(1.0);
                }
                grow_classifier(&cols, &high, &weight, &params, &mut rng)
            })
            .collect();
        Ok(Self {
            config: config.clone(),
            seed,
            trees,
        })
    }

    pub(crate) fn proba(&self, x: &FeatureVector) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict(&x.0)).sum();
        sum / self.trees.len() as f64
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        if self.trees.is_empty() {
            return Err("trees: forest is empty".into());
        }
        for (i, t) in self.trees.iter().enumerate() {
            t.validate(Some((0.0, 1.0))).map_err(|e| format!("trees[{i}]: {e}"))?;
        }
        Ok(())
    }
}
