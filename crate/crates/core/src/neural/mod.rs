//! A small dense-network engine: forward pass, backpropagation, binary
//! cross-entropy and Adam. Enough for the GAN pair and nothing more.

mod adam;
mod checkpoint;
mod loss;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng::Rng;
use crate::{Error, Result};

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use loss::{bce_loss, bce_sigmoid_grad, BCE_EPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
        }
    }

    /// Derivative expressed through the activation output `a`.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// One fully connected layer; `weights` is `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }

    fn forward(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        let mut z = x.dot(&self.weights.t());
        z += &self.biases;
        let act = self.activation;
        z.mapv_inplace(|v| act.apply(v));
        z
    }
}

/// Gradient (or optimizer moment) tensors shaped like one layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
}

impl LayerGrad {
    pub fn zeros_like(layer: &DenseLayer) -> Self {
        Self {
            weights: Array2::zeros(layer.weights.raw_dim()),
            biases: Array1::zeros(layer.biases.raw_dim()),
        }
    }
}

/// Parameter gradients plus the gradient with respect to the network input.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
    pub input: Array2<f64>,
}

/// Activations recorded by [`DenseNetwork::forward_cached`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: Array2<f64>,
    outputs: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.outputs.last().expect("network has at least one layer")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNetwork {
    layers: Vec<DenseLayer>,
}

impl DenseNetwork {
    /// Glorot-uniform weights, zero biases. `sizes` lists the input width then
    /// every layer's width.
    pub fn init(sizes: &[usize], activations: &[Activation], rng: &mut Rng) -> Result<Self> {
        if sizes.len() < 2 || activations.len() != sizes.len() - 1 {
            return Err(Error::Config(format!(
                "{} layer sizes need {} activations, got {}",
                sizes.len(),
                sizes.len().saturating_sub(1),
                activations.len()
            )));
        }
        if sizes.contains(&0) {
            return Err(Error::Config("layer sizes must be >= 1".into()));
        }
        let layers = sizes
            .windows(2)
            .zip(activations)
            .map(|(pair, &activation)| {
                let (fan_in, fan_out) = (pair[0], pair[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let weights = Array2::from_shape_simple_fn((fan_out, fan_in), || {
                    rng.random_range(-limit..limit)
                });
                DenseLayer {
                    weights,
                    biases: Array1::zeros(fan_out),
                    activation,
                }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("network needs at least one layer".into()));
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.inputs() == 0 || layer.outputs() == 0 {
                return Err(Error::Config(format!("layer {i} has a zero dimension")));
            }
            if layer.biases.len() != layer.outputs() {
                return Err(Error::Dimension {
                    expected: layer.outputs(),
                    found: layer.biases.len(),
                    context: "layer biases",
                });
            }
            if let Some(next) = layers.get(i + 1) {
                if next.inputs() != layer.outputs() {
                    return Err(Error::Dimension {
                        expected: layer.outputs(),
                        found: next.inputs(),
                        context: "adjacent layer widths",
                    });
                }
            }
            if layer
                .weights
                .iter()
                .chain(layer.biases.iter())
                .any(|v| !v.is_finite())
            {
                return Err(Error::NonFinite("layer parameter"));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    /// Mutable access for tests and optimizers; callers keep shapes intact.
    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_size(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_size() {
            return Err(Error::Dimension {
                expected: self.input_size(),
                found: x.ncols(),
                context: "network input width",
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(x)?;
        let mut a = self.layers[0].forward(x);
        for layer in &self.layers[1..] {
            a = layer.forward(&a.view());
        }
        Ok(a)
    }

    pub fn forward_cached(&self, x: &ArrayView2<f64>) -> Result<ForwardCache> {
        self.check_input(x)?;
        let mut outputs: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let a = if i == 0 {
                layer.forward(x)
            } else {
                layer.forward(&outputs[i - 1].view())
            };
            outputs.push(a);
        }
        Ok(ForwardCache {
            input: x.to_owned(),
            outputs,
        })
    }

    /// Backpropagates `d_last`, the loss gradient with respect to the final
    /// layer's pre-activation.
    pub fn backward(&self, cache: &ForwardCache, d_last: Array2<f64>) -> Result<Gradients> {
        let expected = cache.output().raw_dim();
        if d_last.raw_dim() != expected {
            return Err(Error::Dimension {
                expected: expected[1],
                found: d_last.ncols(),
                context: "output gradient shape",
            });
        }
        let mut grads: Vec<LayerGrad> = Vec::with_capacity(self.layers.len());
        let mut dz = d_last;
        for i in (0..self.layers.len()).rev() {
            let prev = if i == 0 {
                &cache.input
            } else {
                &cache.outputs[i - 1]
            };
            let layer = &self.layers[i];
            grads.push(LayerGrad {
                weights: dz.t().dot(prev),
                biases: dz.sum_axis(Axis(0)),
            });
            let mut da = dz.dot(&layer.weights);
            if i > 0 {
                let act = self.layers[i - 1].activation;
                ndarray::Zip::from(&mut da)
                    .and(prev)
                    .for_each(|g, &a| *g *= act.derivative_from_output(a));
            }
            dz = da;
        }
        grads.reverse();
        Ok(Gradients {
            layers: grads,
            input: dz,
        })
    }

    /// Forward pass plus BCE gradients for a network ending in a sigmoid.
    /// Returns the mean loss and the gradients.
    pub fn bce_gradients(
        &self,
        x: &ArrayView2<f64>,
        targets: &Array2<f64>,
    ) -> Result<(f64, Gradients)> {
        let cache = self.forward_cached(x)?;
        let pred = cache.output();
        if pred.raw_dim() != targets.raw_dim() {
            return Err(Error::Dimension {
                expected: pred.len(),
                found: targets.len(),
                context: "targets",
            });
        }
        let loss = loss::bce_mean(pred.iter().copied(), targets.iter().copied(), pred.len());
        let d_last = bce_sigmoid_grad(pred, targets);
        let grads = self.backward(&cache, d_last)?;
        Ok((loss, grads))
    }
}

#[cfg(test)]
mod tests;
