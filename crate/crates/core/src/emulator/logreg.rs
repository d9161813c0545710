use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

/// Full-batch gradient descent settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainerConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Stop once the gradient norm falls below this.
    pub grad_tolerance: f64,
    /// L2 penalty on the weights (not the bias).
    pub l2: f64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            learning_rate: 0.1,
            max_epochs: 2000,
            grad_tolerance: 1e-6,
            l2: 1e-4,
        }
    }
}

/// Binary classifier exposing per-class probabilities.
#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    Linear {
        weights: Vec<f64>,
        bias: f64,
    },
    /// Only one class was present at training time.
    Constant {
        class: usize,
    },
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Classifier {
    /// Probability of class 1.
    pub fn positive_probability(&self, x: &[f64]) -> f64 {
        match self {
            Classifier::Linear { weights, bias } => {
                sigmoid(weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + bias)
            }
            Classifier::Constant { class } => {
                if *class == 1 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn predict_proba(&self, x: &[f64]) -> [f64; 2] {
        let p = self.positive_probability(x);
        [1.0 - p, p]
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        usize::from(self.positive_probability(x) > 0.5)
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, Classifier::Constant { .. })
    }
}

/// Logistic regression on mean cross-entropy, weights initialised at zero.
pub fn train_logreg(train: &Dataset, hyper: &TrainerConfig) -> Result<Classifier> {
    if train.n_classes() != 2 {
        return Err(Error::ConfigInvalid(format!(
            "logistic regression is binary, dataset declares {} classes",
            train.n_classes()
        )));
    }
    if train.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    let counts = train.class_counts();
    if let Some(class) = counts.iter().position(|&c| c == train.len()) {
        return Ok(Classifier::Constant { class });
    }

    let d = train.dim();
    let n = train.len() as f64;
    let mut w = vec![0.0; d];
    let mut bias = 0.0;
    let mut grad = vec![0.0; d];
    for _ in 0..hyper.max_epochs {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_b = 0.0;
        for i in 0..train.len() {
            let x = train.row(i);
            let z = w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + bias;
            let err = sigmoid(z) - train.label(i) as f64;
            for (g, v) in grad.iter_mut().zip(x) {
                *g += err * v;
            }
            grad_b += err;
        }
        for (g, wj) in grad.iter_mut().zip(&w) {
            *g = *g / n + hyper.l2 * wj;
        }
        grad_b /= n;
        let norm = (grad.iter().map(|g| g * g).sum::<f64>() + grad_b * grad_b).sqrt();
        if norm < hyper.grad_tolerance {
            break;
        }
        for (wj, g) in w.iter_mut().zip(&grad) {
            *wj -= hyper.learning_rate * g;
        }
        bias -= hyper.learning_rate * grad_b;
    }
    Ok(Classifier::Linear { weights: w, bias })
}
