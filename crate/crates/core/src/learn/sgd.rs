//! Stochastic gradient descent for linear regression and one-vs-all
//! logistic classification.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lexicon::FeatureVector;
use super::LearnError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub shuffle_seed: u64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self { learning_rate: 0.01, epochs: 100, l2: 0.0, shuffle_seed: 42 }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<(), LearnError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(LearnError::Config(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(LearnError::Config(format!("l2 must be non-negative, got {}", self.l2)));
        }
        Ok(())
    }
}

/// Half squared residual: ½(y − w·φ)².
pub fn squared_loss(w: &[f64], x: &FeatureVector, y: f64) -> f64 {
    let r = y - x.dot(w);
    0.5 * r * r
}

/// Gradient of [`squared_loss`] with respect to `w`: −(y − w·φ)φ.
pub fn squared_loss_gradient(w: &[f64], x: &FeatureVector, y: f64) -> Vec<f64> {
    let r = y - x.dot(w);
    let mut g = vec![0.0; w.len()];
    for &(i, v) in x.entries() {
        if i < g.len() {
            g[i] = -r * v;
        }
    }
    g
}

/// Logistic loss of a 0/1 target: −y·ln σ(w·φ) − (1−y)·ln(1−σ(w·φ)).
pub fn logistic_loss(w: &[f64], x: &FeatureVector, y: f64) -> f64 {
    let z = x.dot(w);
    // ln(1 + e^z) − y·z, evaluated without overflow.
    z.max(0.0) + (-z.abs()).exp().ln_1p() - y * z
}

/// Gradient of [`logistic_loss`]: −(y − σ(w·φ))φ.
pub fn logistic_loss_gradient(w: &[f64], x: &FeatureVector, y: f64) -> Vec<f64> {
    let r = y - sigmoid(x.dot(w));
    let mut g = vec![0.0; w.len()];
    for &(i, v) in x.entries() {
        if i < g.len() {
            g[i] = -r * v;
        }
    }
    g
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// One step: w ← w + η·err·φ − ηλw.
fn update(w: &mut [f64], x: &FeatureVector, err: f64, cfg: &SgdConfig) {
    if cfg.l2 > 0.0 {
        let decay = 1.0 - cfg.learning_rate * cfg.l2;
        for wi in w.iter_mut() {
            *wi *= decay;
        }
    }
    for &(i, v) in x.entries() {
        if let Some(wi) = w.get_mut(i) {
            *wi += cfg.learning_rate * err * v;
        }
    }
}

/// Visits example indices epoch by epoch, reshuffling each epoch with a
/// generator seeded once from the config.
fn for_each_step(n: usize, cfg: &SgdConfig, mut f: impl FnMut(usize)) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.shuffle_seed);
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            f(i);
        }
    }
}

/// Least-squares weights of dimension `dim`.
pub fn train_regression(examples: &[(FeatureVector, f64)], dim: usize, cfg: &SgdConfig) -> Result<Vec<f64>, LearnError> {
    cfg.validate()?;
    if examples.is_empty() {
        return Err(LearnError::EmptyTrainingSet);
    }
    let mut w = vec![0.0; dim];
    for_each_step(examples.len(), cfg, |i| {
        let (x, y) = &examples[i];
        let err = y - x.dot(&w);
        update(&mut w, x, err, cfg);
    });
    Ok(w)
}

/// One weight vector per label; example labels index into `0..n_labels`.
pub fn train_one_vs_all(
    examples: &[(FeatureVector, usize)],
    n_labels: usize,
    dim: usize,
    cfg: &SgdConfig,
) -> Result<Vec<Vec<f64>>, LearnError> {
    cfg.validate()?;
    if examples.is_empty() {
        return Err(LearnError::EmptyTrainingSet);
    }
    let mut ws = vec![vec![0.0; dim]; n_labels];
    for_each_step(examples.len(), cfg, |i| {
        let (x, label) = &examples[i];
        for (l, w) in ws.iter_mut().enumerate() {
            let y = if l == *label { 1.0 } else { 0.0 };
            let err = y - sigmoid(x.dot(w));
            update(w, x, err, cfg);
        }
    });
    Ok(ws)
}
