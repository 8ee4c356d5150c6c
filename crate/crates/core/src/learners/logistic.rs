//! L2-regularized logistic regression fitted by full-batch gradient descent
//! with a backtracking (Armijo) line search on standardized features.

use serde::{Deserialize, Serialize};

use super::{check_training, sigmoid, softplus, FeatureVector, LearnError, Standardizer};
use crate::ingest::Class;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticConfig {
    /// Inverse regularization strength; the penalty is ||w||² / (2 n C).
    pub c: f64,
    pub max_iter: usize,
    /// Stop once the gradient norm falls below this.
    pub tol: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            max_iter: 1000,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub config: LogisticConfig,
    pub standardizer: Standardizer,
    /// Coefficients on standardized features.
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
    /// False when `max_iter` was reached before the gradient tolerance.
    pub converged: bool,
}

/// Mean log-loss plus `lambda / 2 · ||w||²` and its gradient.
///
/// `params` holds the weights followed by the (unpenalized) intercept; rows
/// of `z` must already be standardized.
pub fn logistic_objective(params: &[f64], z: &[Vec<f64>], y: &[f64], lambda: f64) -> (f64, Vec<f64>) {
    let dim = params.len() - 1;
    let (w, b) = (&params[..dim], params[dim]);
    let n = z.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; dim + 1];
    for (row, &target) in z.iter().zip(y) {
        let s = b + row.iter().zip(w).map(|(a, c)| a * c).sum::<f64>();
        loss += softplus(s) - target * s;
        let residual = sigmoid(s) - target;
        for (g, a) in grad.iter_mut().zip(row) {
            *g += residual * a;
        }
        grad[dim] += residual;
    }
    loss /= n;
    grad.iter_mut().for_each(|g| *g /= n);
    let mut penalty = 0.0;
    for (g, wi) in grad.iter_mut().zip(w) {
        *g += lambda * wi;
        penalty += wi * wi;
    }
    (loss + 0.5 * lambda * penalty, grad)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

impl LogisticModel {
    pub fn fit(config: &LogisticConfig, x: &[FeatureVector], y: &[Class]) -> Result<Self, LearnError> {
        check_training(x, y)?.require_both()?;
        let rows: Vec<Vec<f64>> = x.iter().map(|v| v.0.to_vec()).collect();
        let targets: Vec<f64> = y.iter().map(|c| c.target()).collect();
        Self::fit_rows(config, &rows, &targets)
    }

    /// Fits on arbitrary-width rows; targets are 0.0 / 1.0.
    pub(crate) fn fit_rows(config: &LogisticConfig, rows: &[Vec<f64>], y: &[f64]) -> Result<Self, LearnError> {
        if !(config.c > 0.0 && config.c.is_finite()) {
            return Err(LearnError::InvalidConfig("C must be positive".into()));
        }
        if rows.is_empty() {
            return Err(LearnError::EmptyInput);
        }
        let standardizer = Standardizer::fit(rows);
        let z: Vec<Vec<f64>> = rows.iter().map(|r| standardizer.transform(r)).collect();
        let lambda = 1.0 / (rows.len() as f64 * config.c);
        let dim = standardizer.dim();

        let mut theta = vec![0.0; dim + 1];
        let (mut f, mut g) = logistic_objective(&theta, &z, y, lambda);
        let mut step: f64 = 1.0;
        let mut iterations = 0;
        let mut converged = false;
        while iterations < config.max_iter {
            let gn2: f64 = g.iter().map(|a| a * a).sum();
            if gn2.sqrt() < config.tol {
                converged = true;
                break;
            }
            iterations += 1;
            step = (step * 2.0).min(1e4);
            let accepted = loop {
                let cand: Vec<f64> = theta.iter().zip(&g).map(|(t, d)| t - step * d).collect();
                let (fc, gc) = logistic_objective(&cand, &z, y, lambda);
                if fc <= f - 1e-4 * step * gn2 {
                    break Some((cand, fc, gc));
                }
                step *= 0.5;
                if step < 1e-16 {
                    break None;
                }
            };
            match accepted {
                Some((cand, fc, gc)) => {
                    theta = cand;
                    f = fc;
                    g = gc;
                }
                // no descent left at machine precision
                None => break,
            }
        }
        converged |= norm(&g) < config.tol;
        let intercept = theta[dim];
        theta.truncate(dim);
        Ok(Self {
            config: config.clone(),
            standardizer,
            weights: theta,
            intercept,
            iterations,
            converged,
        })
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        let z = self.standardizer.transform(row);
        self.intercept + z.iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>()
    }

    pub(crate) fn proba_row(&self, row: &[f64]) -> f64 {
        sigmoid(self.decision(row))
    }

    pub(crate) fn validate(&self, dim: usize) -> Result<(), String> {
        self.standardizer.validate(dim).map_err(|e| format!("standardizer: {e}"))?;
        if self.weights.len() != dim {
            return Err(format!("weights: expected {dim} coefficients, got {}", self.weights.len()));
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err("weights: non-finite coefficient".into());
        }
        if !self.intercept.is_finite() {
            return Err("intercept: not finite".into());
        }
        Ok(())
    }
}
