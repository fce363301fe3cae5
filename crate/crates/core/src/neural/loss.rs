use ndarray::Array2;

use crate::{Error, Result};

/// Predictions are clamped to `[BCE_EPS, 1 - BCE_EPS]` before taking logs.
pub const BCE_EPS: f64 = 1e-7;

fn pointwise(p: f64, t: f64) -> f64 {
    let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
    -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
}

pub(crate) fn bce_mean(
    pred: impl Iterator<Item = f64>,
    target: impl Iterator<Item = f64>,
    n: usize,
) -> f64 {
    pred.zip(target).map(|(p, t)| pointwise(p, t)).sum::<f64>() / n as f64
}

/// Mean binary cross-entropy.
pub fn bce_loss(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::Dimension {
            expected: pred.len(),
            found: target.len(),
            context: "bce targets",
        });
    }
    if pred.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(bce_mean(
        pred.iter().copied(),
        target.iter().copied(),
        pred.len(),
    ))
}

/// Gradient of the mean BCE with respect to the logits of a sigmoid output:
/// `(p - t) / m`, and zero where the clamp is active.
pub fn bce_sigmoid_grad(pred: &Array2<f64>, target: &Array2<f64>) -> Array2<f64> {
    let m = pred.len() as f64;
    let mut out = pred - target;
    ndarray::Zip::from(&mut out).and(pred).for_each(|g, &p| {
        *g = if (BCE_EPS..=1.0 - BCE_EPS).contains(&p) {
            *g / m
        } else {
            0.0
        };
    });
    out
}
