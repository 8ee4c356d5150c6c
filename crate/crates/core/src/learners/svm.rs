//! Linear SVM trained with Pegasos stochastic subgradient steps on the
//! L2-regularized hinge loss. The bias rides along as a constant feature.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::seed::rng_for;
use super::{check_training, margin_proba, FeatureVector, LearnError, Standardizer, N_FEATURES};
use crate::ingest::Class;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-4,
            epochs: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub config: SvmConfig,
    pub seed: u64,
    pub standardizer: Standardizer,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl SvmModel {
    pub fn fit(config: &SvmConfig, x: &[FeatureVector], y: &[Class], seed: u64) -> Result<Self, LearnError> {
        if !(config.lambda > 0.0 && config.lambda.is_finite()) {
            return Err(LearnError::InvalidConfig("lambda must be positive".into()));
        }
        if config.epochs == 0 {
            return Err(LearnError::InvalidConfig("epochs must be positive".into()));
        }
        check_training(x, y)?.require_both()?;
        let standardizer = Standardizer::fit(x);
        let rows: Vec<[f64; N_FEATURES + 1]> = x
            .iter()
            .map(|v| {
                let z = standardizer.transform(&v.0);
                [z[0], z[1], z[2], 1.0]
            })
            .collect();
        let sign: Vec<f64> = y.iter().map(|c| if *c == Class::High { 1.0 } else { -1.0 }).collect();

        let lambda = config.lambda;
        let radius = 1.0 / lambda.sqrt();
        let mut w = [0.0; N_FEATURES + 1];
        let mut order: Vec<usize> = (0..rows.len()).collect();
        let mut rng = rng_for(seed, 0);
        let mut t = 0u64;
        for _ in 0..config.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                t += 1;
                let eta = 1.0 / (lambda * t as f64);
                let margin = sign[i] * dot(&w, &rows[i]);
                let decay = 1.0 - eta * lambda;
                w.iter_mut().for_each(|v| *v *= decay);
                if margin < 1.0 {
                    for (v, a) in w.iter_mut().zip(&rows[i]) {
                        *v += eta * sign[i] * a;
                    }
                }
                let norm = dot(&w, &w).sqrt();
                if norm > radius {
                    w.iter_mut().for_each(|v| *v *= radius / norm);
                }
            }
        }
        Ok(Self {
            config: config.clone(),
            seed,
            standardizer,
            weights: w[..N_FEATURES].to_vec(),
            bias: w[N_FEATURES],
        })
    }

    /// Signed distance-like score; `High` iff it is >= 0.
    pub fn margin(&self, x: &FeatureVector) -> f64 {
        let z = self.standardizer.transform(&x.0);
        self.bias + z.iter().zip(&self.weights).map(|(a, w)| a * w).sum::<f64>()
    }

    /// Logistic squashing of the margin; only meaningful for averaging in
    /// ensembles.
    pub(crate) fn proba(&self, x: &FeatureVector) -> f64 {
        margin_proba(self.margin(x))
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        self.standardizer
            .validate(N_FEATURES)
            .map_err(|e| format!("standardizer: {e}"))?;
        if self.weights.len() != N_FEATURES || self.weights.iter().any(|w| !w.is_finite()) {
            return Err(format!("weights: need {N_FEATURES} finite coefficients"));
        }
        if !self.bias.is_finite() {
            return Err("bias: not finite".into());
        }
        Ok(())
    }
}

fn dot(a: &[f64; N_FEATURES + 1], b: &[f64; N_FEATURES + 1]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
