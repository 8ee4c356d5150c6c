use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::ingest::Class;

/// Two-class confusion counts with High as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn from_predictions(predicted: &[Class], actual: &[Class]) -> Result<Self, EvalError> {
        if predicted.len() != actual.len() {
            return Err(EvalError::LengthMismatch {
                predicted: predicted.len(),
                actual: actual.len(),
            });
        }
        if predicted.is_empty() {
            return Err(EvalError::Empty);
        }
        let mut cm = Self::default();
        for (p, a) in predicted.iter().zip(actual) {
            match (a, p) {
                (Class::High, Class::High) => cm.tp += 1,
                (Class::High, Class::Low) => cm.fn_ += 1,
                (Class::Low, Class::High) => cm.fp += 1,
                (Class::Low, Class::Low) => cm.tn += 1,
            }
        }
        Ok(cm)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    /// Percentages per actual class: `[[TP, FN], [FP, TN]]`, rows High then
    /// Low. A class with no samples gets a zero row.
    pub fn row_percentages(&self) -> [[f64; 2]; 2] {
        let row = |a: u64, b: u64| {
            let n = (a + b) as f64;
            if n == 0.0 {
                [0.0, 0.0]
            } else {
                [100.0 * a as f64 / n, 100.0 * b as f64 / n]
            }
        };
        [row(self.tp, self.fn_), row(self.fp, self.tn)]
    }

    pub fn merge(&self, other: &Self) -> Self {
        Self {
            tp: self.tp + other.tp,
            fn_: self.fn_ + other.fn_,
            fp: self.fp + other.fp,
            tn: self.tn + other.tn,
        }
    }
}

/// Precision, recall and F1 for one class. A zero denominator yields 0 and
/// sets the matching `*_undefined` flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub f1_undefined: bool,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

impl ClassMetrics {
    fn from_counts(hit: u64, false_pos: u64, false_neg: u64) -> Self {
        let (precision, precision_undefined) = ratio(hit, hit + false_pos);
        let (recall, recall_undefined) = ratio(hit, hit + false_neg);
        let (f1, f1_undefined) = if precision + recall == 0.0 {
            (0.0, true)
        } else {
            (2.0 * precision * recall / (precision + recall), false)
        };
        Self {
            precision,
            recall,
            f1,
            support: hit + false_neg,
            precision_undefined,
            recall_undefined,
            f1_undefined,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

impl Averages {
    fn combine(a: &ClassMetrics, wa: f64, b: &ClassMetrics, wb: f64) -> Self {
        Self {
            precision: wa * a.precision + wb * b.precision,
            recall: wa * a.recall + wb * b.recall,
            f_score: wa * a.f1 + wb * b.f1,
        }
    }
}

/// Which class-average a table reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    Macro,
    Weighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub accuracy: f64,
    pub high: ClassMetrics,
    pub low: ClassMetrics,
    #[serde(rename = "macro")]
    pub macro_avg: Averages,
    pub weighted: Averages,
}

impl EvalMetrics {
    pub fn averages(&self, averaging: Averaging) -> Averages {
        match averaging {
            Averaging::Macro => self.macro_avg,
            Averaging::Weighted => self.weighted,
        }
    }
}

/// Headline metrics of a confusion matrix. `cm` must not be empty.
pub fn metrics(cm: &ConfusionMatrix) -> EvalMetrics {
    let n = cm.total() as f64;
    let high = ClassMetrics::from_counts(cm.tp, cm.fp, cm.fn_);
    let low = ClassMetrics::from_counts(cm.tn, cm.fn_, cm.fp);
    let (wh, wl) = if n > 0.0 {
        (high.support as f64 / n, low.support as f64 / n)
    } else {
        (0.0, 0.0)
    };
    EvalMetrics {
        accuracy: if n > 0.0 { (cm.tp + cm.tn) as f64 / n } else { 0.0 },
        high,
        low,
        macro_avg: Averages::combine(&high, 0.5, &low, 0.5),
        weighted: Averages::combine(&high, wh, &low, wl),
    }
}
