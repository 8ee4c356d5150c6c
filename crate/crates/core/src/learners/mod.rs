//! Binary classifiers over the (RSRP, RSRQ, SNR) feature space.
//!
//! Every learner is configured by a [`LearnerSpec`] and fitted into a
//! [`TrainedModel`]. All models answer [`Classifier::predict_proba`] with the
//! probability of [`Class::High`], and [`Classifier::predict`] thresholds it
//! at 0.5 (ties go to `High`).
//!
//! Trees consume raw features. Logistic regression, the linear SVM and the
//! MLP standardize features first and store the constants in the model.
//!
//! Fitting is deterministic for a given `(data, config, seed)`: every
//! randomized unit (a forest tree, a stacking fold, an ensemble member)
//! draws from its own ChaCha stream derived from the master seed, so thread
//! count and scheduling never change the result.

mod boosting;
mod ensemble;
mod forest;
mod logistic;
pub mod mlp;
pub(crate) mod seed;
mod svm;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ingest::Class;

pub use boosting::{BoostingConfig, BoostingModel};
pub use ensemble::{fit_stacking_meta, StackingConfig, StackingModel, VotingConfig, VotingModel};
pub use forest::{DecisionTreeModel, ForestConfig, RandomForestModel, TreeConfig};
pub use logistic::{logistic_objective, LogisticConfig, LogisticModel};
pub use mlp::{Activation, MlpConfig, MlpModel};
pub use seed::derive_seed;
pub use svm::{SvmConfig, SvmModel};

pub const N_FEATURES: usize = 3;
pub const FEATURE_NAMES: [&str; N_FEATURES] = ["rsrp", "rsrq", "snr"];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LearnError {
    #[error("no training rows")]
    EmptyInput,
    #[error("{features} feature rows but {labels} labels")]
    LengthMismatch { features: usize, labels: usize },
    #[error("non-finite feature value in row {row}")]
    NonFinite { row: usize },
    #[error("training data holds only the {0} class; both classes are required")]
    SingleClass(Class),
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("ensemble member {index} ({kind}): {source}")]
    Member {
        index: usize,
        kind: Kind,
        source: Box<LearnError>,
    },
}

/// One observation: RSRP (dBm), RSRQ (dB), SNR (dB).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; N_FEATURES]);

impl FeatureVector {
    pub fn new(rsrp: f64, rsrq: f64, snr: f64) -> Self {
        Self([rsrp, rsrq, snr])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl AsRef<[f64]> for FeatureVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl From<[f64; N_FEATURES]> for FeatureVector {
    fn from(v: [f64; N_FEATURES]) -> Self {
        Self(v)
    }
}

/// Per-column shift and scale. Zero-variance columns keep scale 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r.as_ref()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r.as_ref()).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub(crate) fn validate(&self, dim: usize) -> Result<(), String> {
        if self.mean.len() != dim || self.scale.len() != dim {
            return Err(format!("standardizer must have {dim} columns"));
        }
        if self.mean.iter().any(|v| !v.is_finite()) {
            return Err("standardizer.mean must be finite".into());
        }
        if self.scale.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err("standardizer.scale must be finite and positive".into());
        }
        Ok(())
    }
}

/// Logistic function, stable at both tails.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// sigmoid(margin), nudged so that `proba >= 0.5` agrees with `margin >= 0`
/// even where the logistic rounds to exactly 0.5.
pub(crate) fn margin_proba(margin: f64) -> f64 {
    let p = sigmoid(margin);
    if margin < 0.0 && p >= 0.5 {
        0.5f64.next_down()
    } else if margin >= 0.0 && p < 0.5 {
        0.5
    } else {
        p
    }
}

pub trait Classifier {
    /// Probability of [`Class::High`].
    fn predict_proba(&self, x: &FeatureVector) -> Result<f64, LearnError>;

    fn predict(&self, x: &FeatureVector) -> Result<Class, LearnError> {
        Ok(if self.predict_proba(x)? >= 0.5 {
            Class::High
        } else {
            Class::Low
        })
    }
}

/// Something that can be fitted on labeled rows.
pub trait Learner: Sync {
    type Model: Classifier + Send;

    fn name(&self) -> String;

    fn fit(&self, x: &[FeatureVector], y: &[Class], seed: u64) -> Result<Self::Model, LearnError>;
}

/// Class counts after checking shapes and finiteness.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ClassCounts {
    pub low: usize,
    pub high: usize,
}

impl ClassCounts {
    pub fn total(&self) -> usize {
        self.low + self.high
    }

    pub fn require_both(&self) -> Result<(), LearnError> {
        match (self.low, self.high) {
            (0, _) => Err(LearnError::SingleClass(Class::High)),
            (_, 0) => Err(LearnError::SingleClass(Class::Low)),
            _ => Ok(()),
        }
    }
}

pub(crate) fn check_training(x: &[FeatureVector], y: &[Class]) -> Result<ClassCounts, LearnError> {
    if x.len() != y.len() {
        return Err(LearnError::LengthMismatch {
            features: x.len(),
            labels: y.len(),
        });
    }
    if x.is_empty() {
        return Err(LearnError::EmptyInput);
    }
    if let Some(row) = x.iter().position(|v| !v.is_finite()) {
        return Err(LearnError::NonFinite { row });
    }
    let high = y.iter().filter(|c| **c == Class::High).count();
    Ok(ClassCounts {
        low: y.len() - high,
        high,
    })
}

pub(crate) fn check_input(x: &FeatureVector) -> Result<(), LearnError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(LearnError::NonFinite { row: 0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    DecisionTree,
    RandomForest,
    LogisticRegression,
    LinearSvm,
    GradientBoosting,
    Stacking,
    SoftVoting,
    Mlp,
}

impl Kind {
    pub const ALL: [Kind; 8] = [
        Kind::DecisionTree,
        Kind::RandomForest,
        Kind::LogisticRegression,
        Kind::LinearSvm,
        Kind::GradientBoosting,
        Kind::Stacking,
        Kind::SoftVoting,
        Kind::Mlp,
    ];

    /// Short name used on the command line and in file names.
    pub fn short_name(self) -> &'static str {
        match self {
            Kind::DecisionTree => "dt",
            Kind::RandomForest => "rf",
            Kind::LogisticRegression => "lr",
            Kind::LinearSvm => "svm",
            Kind::GradientBoosting => "gbt",
            Kind::Stacking => "stacking",
            Kind::SoftVoting => "voting",
            Kind::Mlp => "mlp",
        }
    }

    /// Row label used in result tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Kind::DecisionTree => "Decision Tree",
            Kind::RandomForest => "Random Forest",
            Kind::LogisticRegression => "Logistic Regression",
            Kind::LinearSvm => "SVM",
            Kind::GradientBoosting => "Gradient Boosting",
            Kind::Stacking => "Stacking",
            Kind::SoftVoting => "Voting: Soft",
            Kind::Mlp => "Neural Network",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        let kind = match s.as_str() {
            "dt" | "tree" | "decision_tree" => Kind::DecisionTree,
            "rf" | "forest" | "random_forest" => Kind::RandomForest,
            "lr" | "logistic" | "logistic_regression" => Kind::LogisticRegression,
            "svm" | "linear_svm" => Kind::LinearSvm,
            "gbt" | "xgb" | "xgboost" | "gradient_boosting" => Kind::GradientBoosting,
            "stacking" => Kind::Stacking,
            "voting" | "soft_voting" => Kind::SoftVoting,
            "mlp" | "nn" => Kind::Mlp,
            _ => {
                let valid: Vec<_> = Kind::ALL.iter().map(|k| k.short_name()).collect();
                return Err(format!("unknown model `{s}`; valid kinds: {}", valid.join(", ")));
            }
        };
        Ok(kind)
    }
}

/// A learner and its full effective configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "config", rename_all = "snake_case")]
pub enum LearnerSpec {
    DecisionTree(TreeConfig),
    RandomForest(ForestConfig),
    LogisticRegression(LogisticConfig),
    LinearSvm(SvmConfig),
    GradientBoosting(BoostingConfig),
    Stacking(StackingConfig),
    SoftVoting(VotingConfig),
    Mlp(MlpConfig),
}

impl LearnerSpec {
    /// The built-in defaults for `kind`.
    pub fn default_for(kind: Kind) -> Self {
        match kind {
            Kind::DecisionTree => LearnerSpec::DecisionTree(TreeConfig::default()),
            Kind::RandomForest => LearnerSpec::RandomForest(ForestConfig::default()),
            Kind::LogisticRegression => LearnerSpec::LogisticRegression(LogisticConfig::default()),
            Kind::LinearSvm => LearnerSpec::LinearSvm(SvmConfig::default()),
            Kind::GradientBoosting => LearnerSpec::GradientBoosting(BoostingConfig::default()),
            Kind::Stacking => LearnerSpec::Stacking(StackingConfig::default()),
            Kind::SoftVoting => LearnerSpec::SoftVoting(VotingConfig::default()),
            Kind::Mlp => LearnerSpec::Mlp(MlpConfig::default()),
        }
    }

    pub fn kind(&self) -> Kind {
        match self {
            LearnerSpec::DecisionTree(_) => Kind::DecisionTree,
            LearnerSpec::RandomForest(_) => Kind::RandomForest,
            LearnerSpec::LogisticRegression(_) => Kind::LogisticRegression,
            LearnerSpec::LinearSvm(_) => Kind::LinearSvm,
            LearnerSpec::GradientBoosting(_) => Kind::GradientBoosting,
            LearnerSpec::Stacking(_) => Kind::Stacking,
            LearnerSpec::SoftVoting(_) => Kind::SoftVoting,
            LearnerSpec::Mlp(_) => Kind::Mlp,
        }
    }
}

impl Learner for LearnerSpec {
    type Model = TrainedModel;

    fn name(&self) -> String {
        self.kind().short_name().to_string()
    }

    fn fit(&self, x: &[FeatureVector], y: &[Class], seed: u64) -> Result<TrainedModel, LearnError> {
        Ok(match self {
            LearnerSpec::DecisionTree(c) => TrainedModel::DecisionTree(DecisionTreeModel::fit(c, x, y)?),
            LearnerSpec::RandomForest(c) => TrainedModel::RandomForest(RandomForestModel::fit(c, x, y, seed)?),
            LearnerSpec::LogisticRegression(c) => {
                TrainedModel::LogisticRegression(LogisticModel::fit(c, x, y)?)
            }
            LearnerSpec::LinearSvm(c) => TrainedModel::LinearSvm(SvmModel::fit(c, x, y, seed)?),
            LearnerSpec::GradientBoosting(c) => {
                TrainedModel::GradientBoosting(BoostingModel::fit(c, x, y)?)
            }
            LearnerSpec::Stacking(c) => TrainedModel::Stacking(StackingModel::fit(c, x, y, seed)?),
            LearnerSpec::SoftVoting(c) => TrainedModel::SoftVoting(VotingModel::fit(c, x, y, seed)?),
            LearnerSpec::Mlp(c) => TrainedModel::Mlp(MlpModel::fit(c, x, y, seed)?),
        })
    }
}

/// A fitted classifier. Immutable; safe to share across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum TrainedModel {
    DecisionTree(DecisionTreeModel),
    RandomForest(RandomForestModel),
    LogisticRegression(LogisticModel),
    LinearSvm(SvmModel),
    GradientBoosting(BoostingModel),
    Stacking(StackingModel),
    SoftVoting(VotingModel),
    Mlp(MlpModel),
}

impl TrainedModel {
    pub fn kind(&self) -> Kind {
        match self {
            TrainedModel::DecisionTree(_) => Kind::DecisionTree,
            TrainedModel::RandomForest(_) => Kind::RandomForest,
            TrainedModel::LogisticRegression(_) => Kind::LogisticRegression,
            TrainedModel::LinearSvm(_) => Kind::LinearSvm,
            TrainedModel::GradientBoosting(_) => Kind::GradientBoosting,
            TrainedModel::Stacking(_) => Kind::Stacking,
            TrainedModel::SoftVoting(_) => Kind::SoftVoting,
            TrainedModel::Mlp(_) => Kind::Mlp,
        }
    }

    /// Re-checks structural invariants; the error names the offending field.
    pub fn validate(&self) -> Result<(), String> {
        match self {
            TrainedModel::DecisionTree(m) => m.validate(),
            TrainedModel::RandomForest(m) => m.validate(),
            TrainedModel::LogisticRegression(m) => m.validate(N_FEATURES),
            TrainedModel::LinearSvm(m) => m.validate(),
            TrainedModel::GradientBoosting(m) => m.validate(),
            TrainedModel::Stacking(m) => m.validate(),
            TrainedModel::SoftVoting(m) => m.validate(),
            TrainedModel::Mlp(m) => m.validate(),
        }
    }

    fn proba_unchecked(&self, x: &FeatureVector) -> f64 {
        match self {
            TrainedModel::DecisionTree(m) => m.proba(x),
            TrainedModel::RandomForest(m) => m.proba(x),
            TrainedModel::LogisticRegression(m) => m.proba_row(&x.0),
            TrainedModel::LinearSvm(m) => m.proba(x),
            TrainedModel::GradientBoosting(m) => m.proba(x),
            TrainedModel::Stacking(m) => m.proba(x),
            TrainedModel::SoftVoting(m) => m.proba(x),
            TrainedModel::Mlp(m) => m.proba(x),
        }
    }
}

impl Classifier for TrainedModel {
    fn predict_proba(&self, x: &FeatureVector) -> Result<f64, LearnError> {
        check_input(x)?;
        Ok(self.proba_unchecked(x))
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::FeatureVector;
    use crate::ingest::Class;

    /// Eight rows separable on SNR alone: Low below 10 dB, High above.
    pub fn d_sep() -> (Vec<FeatureVector>, Vec<Class>) {
        let snr = [0.0, 1.0, 2.0, 3.0, 10.0, 11.0, 12.0, 13.0];
        let x = snr.iter().map(|&s| FeatureVector::new(-100.0, -12.0, s)).collect();
        let y = snr
            .iter()
            .map(|&s| if s < 10.0 { Class::Low } else { Class::High })
            .collect();
        (x, y)
    }

    /// Eight rows, all High.
    pub fn d_const() -> (Vec<FeatureVector>, Vec<Class>) {
        let (x, _) = d_sep();
        (x, vec![Class::High; 8])
    }

    /// High iff (rsrp > -100) == (snr > 5); needs two levels of splits.
    pub fn d_diag() -> (Vec<FeatureVector>, Vec<Class>) {
        let pts = [
            (-110.0, 0.0),
            (-105.0, 2.0),
            (-110.0, 10.0),
            (-105.0, 12.0),
            (-95.0, 0.0),
            (-90.0, 2.0),
            (-95.0, 10.0),
            (-90.0, 12.0),
        ];
        let x = pts.iter().map(|&(p, s)| FeatureVector::new(p, -12.0, s)).collect();
        let y = pts
            .iter()
            .map(|&(p, s)| if (p > -100.0) == (s > 5.0) { Class::High } else { Class::Low })
            .collect();
        (x, y)
    }

    pub fn accuracy<C: super::Classifier>(m: &C, x: &[FeatureVector], y: &[Class]) -> f64 {
        let hits = x
            .iter()
            .zip(y)
            .filter(|(v, c)| m.predict(v).unwrap() == **c)
            .count();
        hits as f64 / x.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_tie_goes_high() {
        struct Fixed(f64);
        impl Classifier for Fixed {
            fn predict_proba(&self, _: &FeatureVector) -> Result<f64, LearnError> {
                Ok(self.0)
            }
        }
        let x = FeatureVector::new(-100.0, -12.0, 5.0);
        assert_eq!(Fixed(0.5).predict(&x).unwrap(), Class::High);
        assert_eq!(Fixed(0.4999).predict(&x).unwrap(), Class::Low);
    }

    #[test]
    fn margin_proba_agrees_with_sign() {
        assert_eq!(margin_proba(0.0), 0.5);
        for m in [-1e-300, -1e-17, -5e-324, 1e-17, 1e-300, -3.0, 3.0] {
            assert_eq!(margin_proba(m) >= 0.5, m >= 0.0, "margin {m}");
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for k in Kind::ALL {
            assert_eq!(k.short_name().parse::<Kind>().unwrap(), k);
        }
        let err = "boosted_bananas".parse::<Kind>().unwrap_err();
        assert!(err.contains("dt, rf, lr, svm, gbt, stacking, voting, mlp"));
    }

    #[test]
    fn standardizer_handles_constant_columns() {
        let s = Standardizer::fit(&[[1.0, 5.0], [3.0, 5.0]]);
        assert_eq!(s.mean, vec![2.0, 5.0]);
        assert_eq!(s.scale, vec![1.0, 1.0]);
        assert_eq!(s.transform(&[3.0, 5.0]), vec![1.0, 0.0]);
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
    }
}
