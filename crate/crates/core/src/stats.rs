//! Spearman rank correlation with average-rank ties and a two-sided
//! t-approximation significance test.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::ingest::Dataset;

/// p-values below this are printed as `below 2.2e-16`.
pub const P_VALUE_FLOOR: f64 = 2.2e-16;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("cannot rank an empty sample")]
    Empty,
    #[error("NaN at position {0}")]
    NaN(usize),
    #[error("samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("correlation needs at least 3 observations, got {0}")]
    TooFew(usize),
    #[error("correlation undefined: {0} has zero rank variance")]
    ZeroVariance(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub metric: String,
    pub rho: f64,
    /// Exact two-sided p-value; formatting applies the display floor.
    pub p_value: f64,
    pub n: usize,
    /// Set when |rho| = 1, where the t statistic is undefined and p is reported as 0.
    pub perfect: bool,
}

impl CorrelationResult {
    pub fn formatted_p_value(&self) -> String {
        format_p_value(self.p_value)
    }
}

pub fn format_p_value(p: f64) -> String {
    if p < P_VALUE_FLOOR {
        "below 2.2e-16".to_string()
    } else if p < 1e-4 {
        format!("{p:.4e}")
    } else {
        format!("{p:.7}")
    }
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn rank_with_ties(values: &[f64]) -> Result<Vec<f64>, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    if let Some(i) = values.iter().position(|v| v.is_nan()) {
        return Err(StatsError::NaN(i));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let shared = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = shared;
        }
        start = end;
    }
    Ok(ranks)
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(StatsError::ZeroVariance("x"));
    }
    if syy == 0.0 {
        return Err(StatsError::ZeroVariance("y"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson correlation of the tie-averaged ranks of `x` and `y`.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(StatsError::TooFew(x.len()));
    }
    pearson(&rank_with_ties(x)?, &rank_with_ties(y)?)
}

/// Two-sided p-value for a rank correlation `rho` over `n` pairs, using
/// t = rho * sqrt((n - 2) / (1 - rho^2)) on n - 2 degrees of freedom.
/// Returns `None` when |rho| = 1.
pub fn t_test_p_value(rho: f64, n: usize) -> Option<f64> {
    let df = (n - 2) as f64;
    let slack = 1.0 - rho * rho;
    if slack <= 0.0 {
        return None;
    }
    let t2 = rho * rho * df / slack;
    // P(|T| > t) = I_{df / (df + t^2)}(df / 2, 1 / 2)
    Some(beta_reg(df / 2.0, 0.5, df / (df + t2)).clamp(0.0, 1.0))
}

pub fn spearman_test(metric: &str, x: &[f64], y: &[f64]) -> Result<CorrelationResult, StatsError> {
    let rho = spearman_rho(x, y)?;
    let p = t_test_p_value(rho, x.len());
    Ok(CorrelationResult {
        metric: metric.to_string(),
        rho,
        p_value: p.unwrap_or(0.0),
        n: x.len(),
        perfect: p.is_none(),
    })
}

/// RSRP, RSRQ and SNR each against the ordinal resolution code.
pub fn correlate_dataset(dataset: &Dataset) -> Result<[CorrelationResult; 3], StatsError> {
    let ordinal = dataset.ordinals();
    if ordinal.len() < 3 {
        return Err(StatsError::TooFew(ordinal.len()));
    }
    if ordinal.iter().all(|&o| o == ordinal[0]) {
        return Err(StatsError::ZeroVariance("resolution"));
    }
    let column = |f: fn(&crate::ingest::LabeledRecord) -> f64| -> Vec<f64> {
        dataset.rows().iter().map(f).collect()
    };
    Ok([
        spearman_test("RSRP", &column(|r| r.rsrp), &ordinal)?,
        spearman_test("RSRQ", &column(|r| r.rsrq), &ordinal)?,
        spearman_test("SNR", &column(|r| r.snr), &ordinal)?,
    ])
}
