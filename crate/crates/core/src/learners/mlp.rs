//! Fully connected 3→32→100→1 network trained full-batch on the logistic
//! (binary cross-entropy with logits) loss.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::seed::rng_for;
use super::{check_training, sigmoid, softplus, FeatureVector, LearnError, Standardizer, N_FEATURES};
use crate::ingest::Class;

/// Input, hidden and output widths.
pub const LAYER_WIDTHS: [usize; 4] = [N_FEATURES, 32, 100, 1];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative given the pre-activation `z` and the output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Adam,
    /// Plain gradient descent at the configured rate.
    Sgd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub activation: Activation,
    pub optimizer: Optimizer,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Start the output layer at zero so every initial probability is 0.5.
    pub zero_init_output: bool,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            epochs: 10_000,
            learning_rate: 1e-4,
            activation: Activation::Relu,
            optimizer: Optimizer::Adam,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            zero_init_output: false,
        }
    }
}

impl MlpConfig {
    fn check(&self) -> Result<(), LearnError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(LearnError::InvalidConfig("learning_rate must be positive".into()));
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return Err(LearnError::InvalidConfig("beta1 and beta2 must lie in [0, 1)".into()));
        }
        if self.eps.is_nan() || self.eps <= 0.0 {
            return Err(LearnError::InvalidConfig("eps must be positive".into()));
        }
        Ok(())
    }
}

/// `weights` is row-major `inputs × outputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub config: MlpConfig,
    pub seed: u64,
    pub standardizer: Standardizer,
    pub layers: Vec<DenseLayer>,
    /// Training loss after the last epoch; `None` before training.
    pub final_loss: Option<f64>,
}

struct Net {
    w: Vec<Array2<f64>>,
    b: Vec<Array1<f64>>,
}

struct Gradient {
    w: Vec<Array2<f64>>,
    b: Vec<Array1<f64>>,
}

impl Net {
    fn from_layers(layers: &[DenseLayer]) -> Self {
        let w = layers
            .iter()
            .map(|l| Array2::from_shape_vec((l.inputs, l.outputs), l.weights.clone()).expect("validated shape"))
            .collect();
        let b = layers.iter().map(|l| Array1::from(l.bias.clone())).collect();
        Self { w, b }
    }

    fn to_layers(&self) -> Vec<DenseLayer> {
        self.w
            .iter()
            .zip(&self.b)
            .map(|(w, b)| DenseLayer {
                inputs: w.nrows(),
                outputs: w.ncols(),
                weights: w.iter().copied().collect(),
                bias: b.to_vec(),
            })
            .collect()
    }

    /// Mean BCE-with-logits loss and its gradient.
    fn loss_gradient(&self, act: Activation, x: &Array2<f64>, y: &Array1<f64>) -> (f64, Gradient) {
        let depth = self.w.len();
        let mut pre = Vec::with_capacity(depth);
        let mut post = vec![x.clone()];
        for l in 0..depth {
            let z = post[l].dot(&self.w[l]) + &self.b[l];
            if l + 1 < depth {
                post.push(z.mapv(|v| act.apply(v)));
            }
            pre.push(z);
        }
        let logits = pre[depth - 1].column(0);
        let n = x.nrows() as f64;
        let loss = logits
            .iter()
            .zip(y)
            .map(|(s, t)| softplus(*s) - t * s)
            .sum::<f64>()
            / n;

        let mut delta = Array2::from_shape_fn((x.nrows(), 1), |(i, _)| (sigmoid(logits[i]) - y[i]) / n);
        let mut gw = vec![Array2::zeros((0, 0)); depth];
        let mut gb = vec![Array1::zeros(0); depth];
        for l in (0..depth).rev() {
            gw[l] = post[l].t().dot(&delta);
            gb[l] = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut back = delta.dot(&self.w[l].t());
                ndarray::Zip::from(&mut back)
                    .and(&pre[l - 1])
                    .and(&post[l])
                    .for_each(|d, &z, &a| *d *= act.derivative(z, a));
                delta = back;
            }
        }
        (loss, Gradient { w: gw, b: gb })
    }
}

fn flatten(w: &[Array2<f64>], b: &[Array1<f64>]) -> Vec<f64> {
    let mut out = Vec::new();
    for (wl, bl) in w.iter().zip(b) {
        out.extend(wl.iter());
        out.extend(bl.iter());
    }
    out
}

fn design(standardizer: &Standardizer, x: &[FeatureVector]) -> Array2<f64> {
    let mut z = Array2::zeros((x.len(), N_FEATURES));
    for (i, v) in x.iter().enumerate() {
        for (j, a) in standardizer.transform(&v.0).into_iter().enumerate() {
            z[[i, j]] = a;
        }
    }
    z
}

fn targets(y: &[Class]) -> Array1<f64> {
    y.iter().map(|c| c.target()).collect()
}

impl MlpModel {
    /// An untrained network: standardizer fitted on `x`, weights drawn
    /// uniformly from ±1/sqrt(fan_in).
    pub fn initialize(config: &MlpConfig, x: &[FeatureVector], seed: u64) -> Result<Self, LearnError> {
        config.check()?;
        if x.is_empty() {
            return Err(LearnError::EmptyInput);
        }
        let standardizer = Standardizer::fit(x);
        let last = LAYER_WIDTHS.len() - 2;
        let layers = LAYER_WIDTHS
            .windows(2)
            .enumerate()
            .map(|(l, pair)| {
                let (inputs, outputs) = (pair[0], pair[1]);
                if l == last && config.zero_init_output {
                    return DenseLayer {
                        inputs,
                        outputs,
                        weights: vec![0.0; inputs * outputs],
                        bias: vec![0.0; outputs],
                    };
                }
                let bound = 1.0 / (inputs as f64).sqrt();
                let mut rng = rng_for(seed, l as u64);
                let weights = (0..inputs * outputs).map(|_| rng.random_range(-bound..bound)).collect();
                let bias = (0..outputs).map(|_| rng.random_range(-bound..bound)).collect();
                DenseLayer {
                    inputs,
                    outputs,
                    weights,
                    bias,
                }
            })
            .collect();
        Ok(Self {
            config: config.clone(),
            seed,
            standardizer,
            layers,
            final_loss: None,
        })
    }

    pub fn fit(config: &MlpConfig, x: &[FeatureVector], y: &[Class], seed: u64) -> Result<Self, LearnError> {
        check_training(x, y)?.require_both()?;
        let mut model = Self::initialize(config, x, seed)?;
        let z = design(&model.standardizer, x);
        let t = targets(y);
        let mut net = Net::from_layers(&model.layers);
        let act = config.activation;

        let mut m_w: Vec<Array2<f64>> = net.w.iter().map(|w| Array2::zeros(w.raw_dim())).collect();
        let mut v_w = m_w.clone();
        let mut m_b: Vec<Array1<f64>> = net.b.iter().map(|b| Array1::zeros(b.raw_dim())).collect();
        let mut v_b = m_b.clone();
        let lr = config.learning_rate;
        let (b1, b2, eps) = (config.beta1, config.beta2, config.eps);
        for epoch in 1..=config.epochs {
            let (_, g) = net.loss_gradient(act, &z, &t);
            match config.optimizer {
                Optimizer::Sgd => {
                    for l in 0..net.w.len() {
                        net.w[l].scaled_add(-lr, &g.w[l]);
                        net.b[l].scaled_add(-lr, &g.b[l]);
                    }
                }
                Optimizer::Adam => {
                    let c1 = 1.0 - b1.powi(epoch as i32);
                    let c2 = 1.0 - b2.powi(epoch as i32);
                    let step = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
                        *m = b1 * *m + (1.0 - b1) * g;
                        *v = b2 * *v + (1.0 - b2) * g * g;
                        *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                    };
                    for l in 0..net.w.len() {
                        ndarray::Zip::from(&mut net.w[l])
                            .and(&mut m_w[l])
                            .and(&mut v_w[l])
                            .and(&g.w[l])
                            .for_each(|p, m, v, &g| step(p, m, v, g));
                        ndarray::Zip::from(&mut net.b[l])
                            .and(&mut m_b[l])
                            .and(&mut v_b[l])
                            .and(&g.b[l])
                            .for_each(|p, m, v, &g| step(p, m, v, g));
                    }
                }
            }
        }
        model.final_loss = Some(net.loss_gradient(act, &z, &t).0);
        model.layers = net.to_layers();
        Ok(model)
    }

    /// All weights and biases, layer by layer (weights row-major, then bias).
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend(&l.weights);
            out.extend(&l.bias);
        }
        out
    }

    /// Overwrites the parameters in [`parameters`](Self::parameters) order.
    pub fn set_parameters(&mut self, params: &[f64]) -> Result<(), LearnError> {
        let total: usize = self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum();
        if params.len() != total {
            return Err(LearnError::InvalidConfig(format!(
                "expected {total} parameters, got {}",
                params.len()
            )));
        }
        let mut rest = params;
        for l in &mut self.layers {
            let (w, tail) = rest.split_at(l.weights.len());
            let (b, tail) = tail.split_at(l.bias.len());
            l.weights.copy_from_slice(w);
            l.bias.copy_from_slice(b);
            rest = tail;
        }
        Ok(())
    }

    /// Mean training loss at the current parameters and its gradient in
    /// [`parameters`](Self::parameters) order.
    pub fn loss_and_gradient(&self, x: &[FeatureVector], y: &[Class]) -> Result<(f64, Vec<f64>), LearnError> {
        check_training(x, y)?;
        let net = Net::from_layers(&self.layers);
        let (loss, g) = net.loss_gradient(self.config.activation, &design(&self.standardizer, x), &targets(y));
        Ok((loss, flatten(&g.w, &g.b)))
    }

    pub fn logit(&self, x: &FeatureVector) -> f64 {
        let mut h = self.standardizer.transform(&x.0);
        let depth = self.layers.len();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut out = layer.bias.clone();
            for (i, a) in h.iter().enumerate() {
                let row = &layer.weights[i * layer.outputs..(i + 1) * layer.outputs];
                for (o, w) in out.iter_mut().zip(row) {
                    *o += a * w;
                }
            }
            if l + 1 < depth {
                out.iter_mut().for_each(|v| *v = self.config.activation.apply(*v));
            }
            h = out;
        }
        h[0]
    }

    pub(crate) fn proba(&self, x: &FeatureVector) -> f64 {
        sigmoid(self.logit(x))
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        self.standardizer
            .validate(N_FEATURES)
            .map_err(|e| format!("standardizer: {e}"))?;
        if self.layers.len() != LAYER_WIDTHS.len() - 1 {
            return Err(format!("layers: expected {} layers, got {}", LAYER_WIDTHS.len() - 1, self.layers.len()));
        }
        for (l, (layer, pair)) in self.layers.iter().zip(LAYER_WIDTHS.windows(2)).enumerate() {
            if layer.inputs != pair[0] || layer.outputs != pair[1] {
                return Err(format!(
                    "layers[{l}]: expected {}x{}, got {}x{}",
                    pair[0], pair[1], layer.inputs, layer.outputs
                ));
            }
            if layer.weights.len() != layer.inputs * layer.outputs || layer.bias.len() != layer.outputs {
                return Err(format!("layers[{l}]: weight or bias length does not match the shape"));
            }
            if layer.weights.iter().chain(&layer.bias).any(|v| !v.is_finite()) {
                return Err(format!("layers[{l}]: non-finite parameter"));
            }
        }
        Ok(())
    }
}
