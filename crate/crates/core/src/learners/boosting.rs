//! Second-order gradient-boosted trees on the logistic loss.
//!
//! The ensemble starts at the prior log-odds. Each round computes per-row
//! gradients `p - y` and hessians `p (1 - p)` and fits a depth-limited tree
//! whose leaves take the Newton weight `-G / (H + lambda)`, scaled by the
//! shrinkage.

use serde::{Deserialize, Serialize};

use super::tree::{grow_newton, NewtonParams, Tree};
use super::{check_training, sigmoid, softplus, FeatureVector, LearnError, N_FEATURES};
use crate::ingest::Class;

/// Prior probabilities are clamped away from 0 and 1 so single-class data
/// still has a finite starting score.
const PRIOR_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostingConfig {
    pub rounds: usize,
    pub max_depth: usize,
    pub shrinkage: f64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    /// Minimum hessian sum per child.
    pub min_child_weight: f64,
}

impl Default for BoostingConfig {
    fn default() -> Self {
        Self {
            rounds: 100,
            max_depth: 3,
            shrinkage: 0.1,
            lambda: 1.0,
            min_child_weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostingModel {
    pub config: BoostingConfig,
    /// Prior log-odds.
    pub base_score: f64,
    pub trees: Vec<Tree>,
    /// Mean training log-loss before the first round and after each round.
    pub loss_trace: Vec<f64>,
}

fn mean_log_loss(score: &[f64], target: &[f64]) -> f64 {
    score
        .iter()
        .zip(target)
        .map(|(s, y)| softplus(*s) - y * s)
        .sum::<f64>()
        / score.len() as f64
}

impl BoostingModel {
    pub fn fit(config: &BoostingConfig, x: &[FeatureVector], y: &[Class]) -> Result<Self, LearnError> {
        if !(config.shrinkage > 0.0 && config.shrinkage.is_finite()) {
            return Err(LearnError::InvalidConfig("shrinkage must be positive".into()));
        }
        if !(config.lambda >= 0.0 && config.min_child_weight >= 0.0) {
            return Err(LearnError::InvalidConfig("lambda and min_child_weight must be non-negative".into()));
        }
        let counts = check_training(x, y)?;
        let prior = (counts.high as f64 / counts.total() as f64).clamp(PRIOR_CLAMP, 1.0 - PRIOR_CLAMP);
        let base_score = (prior / (1.0 - prior)).ln();

        let cols: Vec<[f64; N_FEATURES]> = x.iter().map(|v| v.0).collect();
        let target: Vec<f64> = y.iter().map(|c| c.target()).collect();
        let params = NewtonParams {
            max_depth: config.max_depth,
            lambda: config.lambda,
            min_child_weight: config.min_child_weight,
            shrinkage: config.shrinkage,
        };
        let mut score = vec![base_score; x.len()];
        let mut loss_trace = vec![mean_log_loss(&score, &target)];
        let mut trees = Vec::with_capacity(config.rounds);
        let mut grad = vec![0.0; x.len()];
        let mut hess = vec![0.0; x.len()];
        for _ in 0..config.rounds {
            for i in 0..x.len() {
                let p = sigmoid(score[i]);
                grad[i] = p - target[i];
                hess[i] = p * (1.0 - p);
            }
            let tree = grow_newton(&cols, &grad, &hess, &params);
            for (s, row) in score.iter_mut().zip(&cols) {
                *s += tree.predict(row);
            }
            loss_trace.push(mean_log_loss(&score, &target));
            trees.push(tree);
        }
        Ok(Self {
            config: config.clone(),
            base_score,
            trees,
            loss_trace,
        })
    }

    pub fn score(&self, x: &FeatureVector) -> f64 {
        self.base_score + self.trees.iter().map(|t| t.predict(&x.0)).sum::<f64>()
    }

    pub(crate) fn proba(&self, x: &FeatureVector) -> f64 {
        sigmoid(self.score(x))
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        if !self.base_score.is_finite() {
            return Err("base_score: not finite".into());
        }
        for (i, t) in self.trees.iter().enumerate() {
            t.validate(None).map_err(|e| format!("trees[{i}]: {e}"))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::fixtures::{accuracy, d_const, d_sep};
    use crate::learners::{Classifier, TrainedModel};

    #[test]
    fn zero_rounds_predicts_the_prior() {
        let (x, y) = d_sep();
        let cfg = BoostingConfig { rounds: 0, ..Default::default() };
        let m = TrainedModel::GradientBoosting(BoostingModel::fit(&cfg, &x, &y).unwrap());
        for v in &x {
            assert_eq!(m.predict_proba(v).unwrap(), 0.5);
        }
        // 6 High / 2 Low -> prior 0.75
        let mut y2 = y.clone();
        y2[0] = Class::High;
        y2[1] = Class::High;
        let m = TrainedModel::GradientBoosting(BoostingModel::fit(&cfg, &x, &y2).unwrap());
        assert!((m.predict_proba(&x[0]).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn fits_d_sep_with_non_increasing_loss() {
        let (x, y) = d_sep();
        let m = BoostingModel::fit(&BoostingConfig::default(), &x, &y).unwrap();
        assert_eq!(m.loss_trace.len(), 101);
        for w in m.loss_trace.windows(2) {
            assert!(w[1] <= w[0], "loss went up: {} -> {}", w[0], w[1]);
        }
        assert_eq!(accuracy(&TrainedModel::GradientBoosting(m), &x, &y), 1.0);
    }

    #[test]
    fn single_class_is_allowed() {
        let (x, y) = d_const();
        let m = TrainedModel::GradientBoosting(BoostingModel::fit(&BoostingConfig::default(), &x, &y).unwrap());
        assert!(m.predict_proba(&x[0]).unwrap() > 0.99);
    }
}
