use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::check_labels;
use crate::neural::sigmoid;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogRegConfig {
    pub max_iter: usize,
    pub lr: f64,
    /// Stop once the gradient's max-norm drops below this.
    pub tol: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            lr: 0.1,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    /// Training loss before each gradient step.
    #[serde(skip)]
    pub loss_history: Vec<f64>,
}

impl LogRegModel {
    pub fn predict_proba(&self, x: &ArrayView2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.weights.len() {
            return Err(Error::Dimension {
                expected: self.weights.len(),
                found: x.ncols(),
                context: "logistic regression input width",
            });
        }
        let w = Array1::from(self.weights.clone());
        Ok(x.dot(&w).iter().map(|&z| sigmoid(z + self.bias)).collect())
    }
}

/// `log(1 + e^z) - y z`, stable for large |z|.
fn logistic_loss(z: f64, y: f64) -> f64 {
    let softplus = if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    };
    softplus - y * z
}

/// Full-batch gradient descent on the mean logistic loss, starting from zero.
pub fn logreg_fit(x: &ArrayView2<f64>, y: &[u8], cfg: &LogRegConfig) -> Result<LogRegModel> {
    check_labels(x.nrows(), y)?;
    if !y.contains(&0) || !y.contains(&1) {
        return Err(Error::SingleClass);
    }
    let n = x.nrows() as f64;
    let targets: Array1<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let mut w = Array1::<f64>::zeros(x.ncols());
    let mut b = 0.0;
    let mut history = Vec::new();
    let mut iterations = 0;
    for _ in 0..cfg.max_iter {
        let mut z = x.dot(&w);
        z += b;
        let loss = z
            .iter()
            .zip(&targets)
            .map(|(&z, &t)| logistic_loss(z, t))
            .sum::<f64>()
            / n;
        if !loss.is_finite() {
            return Err(Error::NonFinite("logistic regression loss"));
        }
        history.push(loss);
        let residual = z.mapv(sigmoid) - &targets;
        let grad_w = x.t().dot(&residual) / n;
        let grad_b = residual.sum() / n;
        let norm = grad_w.iter().fold(grad_b.abs(), |m, g| m.max(g.abs()));
        if norm < cfg.tol {
            break;
        }
        w.scaled_add(-cfg.lr, &grad_w);
        b -= cfg.lr * grad_b;
        iterations += 1;
    }
    Ok(LogRegModel {
        weights: w.to_vec(),
        bias: b,
        iterations,
        loss_history: history,
    })
}
