use ndarray::Zip;
use serde::{Deserialize, Serialize};

use super::{DenseNetwork, LayerGrad};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam moments for one network; `m` and `v` mirror its parameter shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub t: u64,
    pub m: Vec<LayerGrad>,
    pub v: Vec<LayerGrad>,
}

impl AdamState {
    pub fn new(net: &DenseNetwork, config: AdamConfig) -> Self {
        let zeros: Vec<LayerGrad> = net.layers().iter().map(LayerGrad::zeros_like).collect();
        Self {
            config,
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    /// One bias-corrected Adam update. Rejects non-finite gradients before
    /// touching any parameter.
    pub fn step(&mut self, net: &mut DenseNetwork, grads: &[LayerGrad]) -> Result<()> {
        if grads.len() != self.m.len() || grads.len() != net.layers().len() {
            return Err(Error::Dimension {
                expected: self.m.len(),
                found: grads.len(),
                context: "adam gradient layers",
            });
        }
        for (i, (g, m)) in grads.iter().zip(&self.m).enumerate() {
            if g.weights.raw_dim() != m.weights.raw_dim()
                || g.biases.raw_dim() != m.biases.raw_dim()
            {
                return Err(Error::Dimension {
                    expected: m.weights.len(),
                    found: g.weights.len(),
                    context: "adam gradient shape",
                });
            }
            if g.weights
                .iter()
                .chain(g.biases.iter())
                .any(|v| !v.is_finite())
            {
                return Err(Error::NonFiniteGradient { layer: i });
            }
        }

        self.t += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);
        let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        };
        for (((layer, g), m), v) in net
            .layers_mut()
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            Zip::from(&mut layer.weights)
                .and(&mut m.weights)
                .and(&mut v.weights)
                .and(&g.weights)
                .for_each(|p, m, v, &g| update(p, m, v, g));
            Zip::from(&mut layer.biases)
                .and(&mut m.biases)
                .and(&mut v.biases)
                .and(&g.biases)
                .for_each(|p, m, v, &g| update(p, m, v, g));
        }
        Ok(())
    }
}
