//! Stratified cross-validation, hold-out confusion matrices and the
//! accuracy / precision / recall / F-score metrics.
//!
//! [`evaluate`] first splits off a stratified hold-out set, cross-validates
//! on the remaining rows, then fits once on those rows and scores the
//! hold-out set. The two evaluations never share test rows.

mod folds;
mod metrics;
pub mod render;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ingest::{Class, Dataset, Provenance};
use crate::learners::{derive_seed, Classifier, FeatureVector, Kind, LearnError, Learner, LearnerSpec};

pub(crate) use folds::assign_stratified;
pub use folds::{holdout_split, stratified_kfold};
pub use metrics::{metrics, Averages, Averaging, ClassMetrics, ConfusionMatrix, EvalMetrics};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("{predicted} predictions but {actual} labels")]
    LengthMismatch { predicted: usize, actual: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("k must be at least 2, got {0}")]
    InvalidFolds(usize),
    #[error("class {class} has {count} rows, fewer than k = {k}")]
    ClassTooSmall { class: Class, count: usize, k: usize },
    #[error("test fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error("class {class} has {count} rows, too few to appear in both the training and the test split")]
    HoldoutTooSmall { class: Class, count: usize },
    #[error("fold {fold}: {source}")]
    Fold { fold: usize, source: LearnError },
    #[error("hold-out fit: {0}")]
    Learn(#[from] LearnError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: EvalMetrics,
}

/// Arithmetic means of the per-fold values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub accuracy: f64,
    #[serde(rename = "macro")]
    pub macro_avg: Averages,
    pub weighted: Averages,
}

impl MeanMetrics {
    pub fn of(folds: &[FoldResult]) -> Self {
        let k = folds.len() as f64;
        let mean = |f: &dyn Fn(&EvalMetrics) -> f64| folds.iter().map(|r| f(&r.metrics)).sum::<f64>() / k;
        Self {
            accuracy: mean(&|m| m.accuracy),
            macro_avg: Averages {
                precision: mean(&|m| m.macro_avg.precision),
                recall: mean(&|m| m.macro_avg.recall),
                f_score: mean(&|m| m.macro_avg.f_score),
            },
            weighted: Averages {
                precision: mean(&|m| m.weighted.precision),
                recall: mean(&|m| m.weighted.recall),
                f_score: mean(&|m| m.weighted.f_score),
            },
        }
    }

    pub fn averages(&self, averaging: Averaging) -> Averages {
        match averaging {
            Averaging::Macro => self.macro_avg,
            Averaging::Weighted => self.weighted,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub k: usize,
    pub folds: Vec<FoldResult>,
    pub mean: MeanMetrics,
}

fn score<C: Classifier>(model: &C, x: &[FeatureVector], y: &[Class]) -> Result<ConfusionMatrix, EvalError> {
    let predicted = x.iter().map(|v| model.predict(v)).collect::<Result<Vec<_>, _>>()?;
    ConfusionMatrix::from_predictions(&predicted, y)
}

fn pick<T: Copy>(v: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| v[i]).collect()
}

/// Stratified k-fold cross-validation. Fold `f` trains with seed stream
/// `f` of `seed`; results come back ordered by fold.
pub fn cross_validate<L: Learner>(
    learner: &L,
    x: &[FeatureVector],
    y: &[Class],
    k: usize,
    seed: u64,
) -> Result<CvResult, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::LengthMismatch {
            predicted: x.len(),
            actual: y.len(),
        });
    }
    let folds = stratified_kfold(y, k, seed)?;
    let results = folds
        .par_iter()
        .enumerate()
        .map(|(fold, test)| {
            let mut held = vec![false; x.len()];
            test.iter().for_each(|&i| held[i] = true);
            let train: Vec<usize> = (0..x.len()).filter(|&i| !held[i]).collect();
            let model = learner
                .fit(&pick(x, &train), &pick(y, &train), derive_seed(seed, fold as u64))
                .map_err(|source| EvalError::Fold { fold, source })?;
            let confusion = score(&model, &pick(x, test), &pick(y, test)).map_err(|e| match e {
                EvalError::Learn(source) => EvalError::Fold { fold, source },
                other => other,
            })?;
            Ok(FoldResult {
                fold,
                n_train: train.len(),
                n_test: test.len(),
                confusion,
                metrics: metrics(&confusion),
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    let mean = MeanMetrics::of(&results);
    Ok(CvResult { k, folds: results, mean })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutResult {
    pub n_train: usize,
    pub n_test: usize,
    pub confusion: ConfusionMatrix,
    /// `[[TP, FN], [FP, TN]]` as percentages of each actual class.
    pub row_percentages: [[f64; 2]; 2],
    pub metrics: EvalMetrics,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub k: usize,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            k: 5,
            test_fraction: 0.2,
            seed: 42,
        }
    }
}

/// Everything needed to reproduce and read one evaluation. Contains no
/// timing, so reruns with the same seed give identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub kind: Kind,
    pub classifier: String,
    pub learner: LearnerSpec,
    pub options: EvalOptions,
    pub provenance: Provenance,
    pub n_rows: usize,
    pub cross_validation: CvResult,
    pub holdout: HoldoutResult,
}

/// Hold-out split, cross-validation on the training part, then a single fit
/// scored on the hold-out part.
pub fn evaluate(spec: &LearnerSpec, data: &Dataset, options: &EvalOptions) -> Result<EvalReport, EvalError> {
    let x: Vec<FeatureVector> = data.features().into_iter().map(FeatureVector).collect();
    let y = data.labels();
    let (train, test) = holdout_split(&y, options.test_fraction, derive_seed(options.seed, 1))?;
    let (tx, ty) = (pick(&x, &train), pick(&y, &train));
    let cross_validation = cross_validate(spec, &tx, &ty, options.k, derive_seed(options.seed, 2))?;
    let model = spec.fit(&tx, &ty, derive_seed(options.seed, 3))?;
    let confusion = score(&model, &pick(&x, &test), &pick(&y, &test))?;
    Ok(EvalReport {
        kind: spec.kind(),
        classifier: spec.kind().display_name().to_string(),
        learner: spec.clone(),
        options: *options,
        provenance: data.provenance.clone(),
        n_rows: data.len(),
        cross_validation,
        holdout: HoldoutResult {
            n_train: train.len(),
            n_test: test.len(),
            confusion,
            row_percentages: confusion.row_percentages(),
            metrics: metrics(&confusion),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Predicts whichever class was more frequent in training (High on ties).
    struct Majority;

    struct Constant(Class);

    impl Classifier for Constant {
        fn predict_proba(&self, _: &FeatureVector) -> Result<f64, LearnError> {
            Ok(self.0.target())
        }
    }

    impl Learner for Majority {
        type Model = Constant;

        fn name(&self) -> String {
            "majority".into()
        }

        fn fit(&self, _: &[FeatureVector], y: &[Class], _: u64) -> Result<Constant, LearnError> {
            let high = y.iter().filter(|c| **c == Class::High).count();
            Ok(Constant(if 2 * high >= y.len() { Class::High } else { Class::Low }))
        }
    }

    fn sixty_forty() -> (Vec<FeatureVector>, Vec<Class>) {
        let x = (0..100).map(|i| FeatureVector::new(-100.0, -12.0, f64::from(i))).collect();
        let y = (0..100).map(|i| if i < 60 { Class::High } else { Class::Low }).collect();
        (x, y)
    }

    #[test]
    fn majority_baseline_on_sixty_forty() {
        let (x, y) = sixty_forty();
        let cv = cross_validate(&Majority, &x, &y, 5, 11).unwrap();
        assert_eq!(cv.folds.len(), 5);
        for f in &cv.folds {
            assert_eq!(f.metrics.accuracy, 0.6);
            assert_eq!(f.metrics.high.recall, 1.0);
            assert_eq!(f.metrics.low.recall, 0.0);
        }
        assert!((cv.mean.accuracy - 0.6).abs() < 1e-12);
    }

    #[test]
    fn majority_matches_hand_computed_fold_baseline() {
        // 23 High / 17 Low with k = 4 gives uneven folds; the baseline of each
        // fold is the share of the training majority (High) in that fold.
        let x: Vec<FeatureVector> = (0..40).map(|i| FeatureVector::new(-90.0, -10.0, f64::from(i))).collect();
        let y: Vec<Class> = (0..40).map(|i| if i % 7 < 4 { Class::High } else { Class::Low }).collect();
        let folds = stratified_kfold(&y, 4, 5).unwrap();
        let cv = cross_validate(&Majority, &x, &y, 4, 5).unwrap();
        for (f, test) in cv.folds.iter().zip(&folds) {
            let high = test.iter().filter(|&&i| y[i] == Class::High).count();
            assert_eq!(f.metrics.accuracy, high as f64 / test.len() as f64);
        }
        let mean = cv.folds.iter().map(|f| f.metrics.accuracy).sum::<f64>() / 4.0;
        assert!((cv.mean.accuracy - mean).abs() <= 1e-12);
    }

    #[test]
    fn fold_errors_carry_the_index() {
        struct Failing;
        impl Learner for Failing {
            type Model = Constant;
            fn name(&self) -> String {
                "failing".into()
            }
            fn fit(&self, _: &[FeatureVector], _: &[Class], _: u64) -> Result<Constant, LearnError> {
                Err(LearnError::InvalidConfig("nope".into()))
            }
        }
        let (x, y) = sixty_forty();
        match cross_validate(&Failing, &x, &y, 5, 0) {
            Err(EvalError::Fold { fold: 0, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn too_small_class_is_reported() {
        let (x, mut y) = sixty_forty();
        y.iter_mut().skip(3).for_each(|c| *c = Class::High);
        assert!(matches!(
            cross_validate(&Majority, &x, &y, 5, 0),
            Err(EvalError::ClassTooSmall { class: Class::Low, count: 0, k: 5 })
        ));
    }
}
