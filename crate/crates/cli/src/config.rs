//! Flat key-value settings. Built-in defaults < config file < command-line
//! flags.

use std::path::Path;

use serde::Deserialize;

use qoeshift_core::learners::{Activation, LearnerSpec};

use crate::error::CliError;

/// Every key is optional; unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub seed: Option<u64>,
    pub format: Option<String>,
    pub tolerance_ms: Option<i64>,
    pub session_date: Option<String>,
    pub k: Option<usize>,
    pub test_fraction: Option<f64>,
    /// Depth limit for the decision tree and forest trees.
    pub max_depth: Option<usize>,
    pub n_trees: Option<usize>,
    pub c: Option<f64>,
    pub max_iter: Option<usize>,
    pub svm_lambda: Option<f64>,
    pub svm_epochs: Option<usize>,
    pub rounds: Option<usize>,
    pub shrinkage: Option<f64>,
    pub stacking_folds: Option<usize>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub activation: Option<Activation>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($field:ident),+) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )+
    };
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// Values present in `top` replace those in `self`.
    pub fn overlay(mut self, top: &Settings) -> Self {
        overlay!(
            self, top, seed, format, tolerance_ms, session_date, k, test_fraction, max_depth, n_trees, c, max_iter,
            svm_lambda, svm_epochs, rounds, shrinkage, stacking_folds, epochs, learning_rate, activation
        );
        self
    }

    /// Writes the hyperparameter settings into `spec`, descending into
    /// ensemble members.
    pub fn apply(&self, spec: &mut LearnerSpec) {
        match spec {
            LearnerSpec::DecisionTree(c) => {
                if self.max_depth.is_some() {
                    c.max_depth = self.max_depth;
                }
            }
            LearnerSpec::RandomForest(c) => {
                if self.max_depth.is_some() {
                    c.max_depth = self.max_depth;
                }
                if let Some(n) = self.n_trees {
                    c.n_trees = n;
                }
            }
            LearnerSpec::LogisticRegression(c) => {
                if let Some(v) = self.c {
                    c.c = v;
                }
                if let Some(v) = self.max_iter {
                    c.max_iter = v;
                }
            }
            LearnerSpec::LinearSvm(c) => {
                if let Some(v) = self.svm_lambda {
                    c.lambda = v;
                }
                if let Some(v) = self.svm_epochs {
                    c.epochs = v;
                }
            }
            LearnerSpec::GradientBoosting(c) => {
                if let Some(v) = self.rounds {
                    c.rounds = v;
                }
                if let Some(v) = self.shrinkage {
                    c.shrinkage = v;
                }
            }
            LearnerSpec::Stacking(c) => {
                if let Some(v) = self.stacking_folds {
                    c.folds = v;
                }
                c.base.iter_mut().for_each(|m| self.apply(m));
            }
            LearnerSpec::SoftVoting(c) => c.members.iter_mut().for_each(|m| self.apply(m)),
            LearnerSpec::Mlp(c) => {
                if let Some(v) = self.epochs {
                    c.epochs = v;
                }
                if let Some(v) = self.learning_rate {
                    c.learning_rate = v;
                }
                if let Some(v) = self.activation {
                    c.activation = v;
                }
            }
        }
    }
}
