//! Stacking (logistic meta-model over out-of-fold base probabilities) and
//! soft voting (mean of member probabilities).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::seed::derive_seed;
use super::{
    check_training, BoostingConfig, Classifier, FeatureVector, ForestConfig, LearnError, Learner, LearnerSpec,
    LogisticConfig, LogisticModel, SvmConfig, TrainedModel, TreeConfig,
};
use crate::eval::assign_stratified;
use crate::ingest::Class;

fn default_members() -> Vec<LearnerSpec> {
    vec![
        LearnerSpec::DecisionTree(TreeConfig::default()),
        LearnerSpec::RandomForest(ForestConfig::default()),
        LearnerSpec::LogisticRegression(LogisticConfig::default()),
        LearnerSpec::LinearSvm(SvmConfig::default()),
        LearnerSpec::GradientBoosting(BoostingConfig::default()),
    ]
}

fn fit_member(
    spec: &LearnerSpec,
    index: usize,
    x: &[FeatureVector],
    y: &[Class],
    seed: u64,
) -> Result<TrainedModel, LearnError> {
    spec.fit(x, y, seed).map_err(|e| LearnError::Member {
        index,
        kind: spec.kind(),
        source: Box::new(e),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StackingConfig {
    pub base: Vec<LearnerSpec>,
    pub meta: LogisticConfig,
    /// Internal stratified folds used to produce out-of-fold meta-features.
    pub folds: usize,
}

impl Default for StackingConfig {
    fn default() -> Self {
        Self {
            base: default_members(),
            meta: LogisticConfig::default(),
            folds: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackingModel {
    pub folds: usize,
    pub seed: u64,
    /// Base models refitted on the full training set.
    pub base: Vec<TrainedModel>,
    /// Logistic model over the base probabilities, in `base` order.
    pub meta: LogisticModel,
}

/// Fits the stacking meta-model on a matrix of base probabilities.
pub fn fit_stacking_meta(
    config: &LogisticConfig,
    meta_features: &[Vec<f64>],
    y: &[Class],
) -> Result<LogisticModel, LearnError> {
    let targets: Vec<f64> = y.iter().map(|c| c.target()).collect();
    LogisticModel::fit_rows(config, meta_features, &targets)
}

impl StackingModel {
    pub fn fit(config: &StackingConfig, x: &[FeatureVector], y: &[Class], seed: u64) -> Result<Self, LearnError> {
        if config.base.is_empty() {
            return Err(LearnError::InvalidConfig("stacking needs at least one base learner".into()));
        }
        if config.folds < 2 {
            return Err(LearnError::InvalidConfig("stacking needs at least 2 folds".into()));
        }
        check_training(x, y)?.require_both()?;
        if x.len() < config.folds {
            return Err(LearnError::TooFewRows {
                needed: config.folds,
                got: x.len(),
            });
        }
        let n_base = config.base.len();
        let folds = assign_stratified(y, config.folds, derive_seed(seed, 0));

        let fold_outputs = folds
            .par_iter()
            .enumerate()
            .map(|(f, held_out)| {
                let mut in_fold = vec![false; x.len()];
                held_out.iter().for_each(|&i| in_fold[i] = true);
                let (tx, ty): (Vec<FeatureVector>, Vec<Class>) = (0..x.len())
                    .filter(|&i| !in_fold[i])
                    .map(|i| (x[i], y[i]))
                    .unzip();
                let mut columns = Vec::with_capacity(n_base);
                for (b, spec) in config.base.iter().enumerate() {
                    let stream = 1 + (f * n_base + b) as u64;
                    let model = fit_member(spec, b, &tx, &ty, derive_seed(seed, stream))?;
                    let probs = held_out
                        .iter()
                        .map(|&i| model.predict_proba(&x[i]))
                        .collect::<Result<Vec<f64>, _>>()?;
                    columns.push(probs);
                }
                Ok((held_out, columns))
            })
            .collect::<Result<Vec<_>, LearnError>>()?;

        let mut meta_features = vec![vec![0.0; n_base]; x.len()];
        for (held_out, columns) in fold_outputs {
            for (b, column) in columns.iter().enumerate() {
                for (&row, &p) in held_out.iter().zip(column) {
                    meta_features[row][b] = p;
                }
            }
        }
        let meta = fit_stacking_meta(&config.meta, &meta_features, y)?;

        let base = config
            .base
            .par_iter()
            .enumerate()
            .map(|(b, spec)| fit_member(spec, b, x, y, derive_seed(seed, 1_000_000 + b as u64)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            folds: config.folds,
            seed,
            base,
            meta,
        })
    }

    pub(crate) fn proba(&self, x: &FeatureVector) -> f64 {
        let features: Vec<f64> = self.base.iter().map(|m| m.proba_unchecked(x)).collect();
        self.meta.proba_row(&features)
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        if self.base.is_empty() {
            return Err("base: no base models".into());
        }
        for (i, m) in self.base.iter().enumerate() {
            m.validate().map_err(|e| format!("base[{i}].{e}"))?;
        }
        self.meta.validate(self.base.len()).map_err(|e| format!("meta.{e}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VotingConfig {
    pub members: Vec<LearnerSpec>,
}

impl Default for VotingConfig {
    fn default() -> Self {
        Self {
            members: default_members(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VotingModel {
    pub seed: u64,
    pub members: Vec<TrainedModel>,
}

impl VotingModel {
    pub fn fit(config: &VotingConfig, x: &[FeatureVector], y: &[Class], seed: u64) -> Result<Self, LearnError> {
        if config.members.is_empty() {
            return Err(LearnError::InvalidConfig("voting needs at least one member".into()));
        }
        check_training(x, y)?;
        let members = config
            .members
            .par_iter()
            .enumerate()
            .map(|(b, spec)| fit_member(spec, b, x, y, derive_seed(seed, b as u64)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { seed, members })
    }

    /// Builds a voter over already-fitted members.
    pub fn from_members(members: Vec<TrainedModel>) -> Result<Self, LearnError> {
        if members.is_empty() {
            return Err(LearnError::InvalidConfig("voting needs at least one member".into()));
        }
        Ok(Self { seed: 0, members })
    }

    pub(crate) fn proba(&self, x: &FeatureVector) -> f64 {
        let sum: f64 = self.members.iter().map(|m| m.proba_unchecked(x)).sum();
        sum / self.members.len() as f64
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        if self.members.is_empty() {
            return Err("members: no members".into());
        }
        for (i, m) in self.members.iter().enumerate() {
            m.validate().map_err(|e| format!("members[{i}].{e}"))?;
        }
        Ok(())
    }
}
