use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{Activation, AdamConfig, AdamState, DenseLayer, DenseNetwork, LayerGrad};
use crate::{Error, Result};

const FORMAT: &str = "ganfs-dense-network/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LayerDoc {
    inputs: usize,
    outputs: usize,
    activation: Activation,
    /// Row-major `outputs × inputs`.
    weights: Vec<f64>,
    biases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MomentDoc {
    weights: Vec<f64>,
    biases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct OptimizerDoc {
    config: AdamConfig,
    t: u64,
    m: Vec<MomentDoc>,
    v: Vec<MomentDoc>,
}

/// Self-describing network document: layer sizes, activations, row-major
/// weights, biases and optional Adam state. JSON numbers round-trip exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    format: String,
    layer_sizes: Vec<usize>,
    layers: Vec<LayerDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    optimizer: Option<OptimizerDoc>,
}

fn flatten(a: &Array2<f64>) -> Vec<f64> {
    a.iter().copied().collect()
}

fn moment_doc(g: &LayerGrad) -> MomentDoc {
    MomentDoc {
        weights: flatten(&g.weights),
        biases: g.biases.to_vec(),
    }
}

impl Checkpoint {
    pub fn capture(net: &DenseNetwork, optimizer: Option<&AdamState>) -> Self {
        let mut layer_sizes = vec![net.input_size()];
        layer_sizes.extend(net.layers().iter().map(DenseLayer::outputs));
        Self {
            format: FORMAT.to_string(),
            layer_sizes,
            layers: net
                .layers()
                .iter()
                .map(|l| LayerDoc {
                    inputs: l.inputs(),
                    outputs: l.outputs(),
                    activation: l.activation,
                    weights: flatten(&l.weights),
                    biases: l.biases.to_vec(),
                })
                .collect(),
            optimizer: optimizer.map(|s| OptimizerDoc {
                config: s.config,
                t: s.t,
                m: s.m.iter().map(moment_doc).collect(),
                v: s.v.iter().map(moment_doc).collect(),
            }),
        }
    }

    pub fn restore(&self) -> std::result::Result<(DenseNetwork, Option<AdamState>), String> {
        if self.format != FORMAT {
            return Err(format!("unsupported format `{}`", self.format));
        }
        let layers = self
            .layers
            .iter()
            .map(|l| {
                let weights = Array2::from_shape_vec((l.outputs, l.inputs), l.weights.clone())
                    .map_err(|e| format!("weights: {e}"))?;
                Ok(DenseLayer {
                    weights,
                    biases: Array1::from(l.biases.clone()),
                    activation: l.activation,
                })
            })
            .collect::<std::result::Result<Vec<_>, String>>()?;
        let net = DenseNetwork::from_layers(layers).map_err(|e| e.to_string())?;
        let mut sizes = vec![net.input_size()];
        sizes.extend(net.layers().iter().map(DenseLayer::outputs));
        if sizes != self.layer_sizes {
            return Err("layer_sizes disagree with layer shapes".into());
        }
        let optimizer = match &self.optimizer {
            None => None,
            Some(doc) => {
                let moments = |docs: &[MomentDoc]| -> std::result::Result<Vec<LayerGrad>, String> {
                    if docs.len() != net.layers().len() {
                        return Err("optimizer moments do not match layer count".into());
                    }
                    docs.iter()
                        .zip(net.layers())
                        .map(|(d, l)| {
                            if d.biases.len() != l.biases.len() {
                                return Err("bias moment length mismatch".to_string());
                            }
                            Ok(LayerGrad {
                                weights: Array2::from_shape_vec(
                                    l.weights.raw_dim(),
                                    d.weights.clone(),
                                )
                                .map_err(|e| format!("moment: {e}"))?,
                                biases: Array1::from(d.biases.clone()),
                            })
                        })
                        .collect()
                };
                let state = AdamState {
                    config: doc.config,
                    t: doc.t,
                    m: moments(&doc.m)?,
                    v: moments(&doc.v)?,
                };
                Some(state)
            }
        };
        Ok((net, optimizer))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("checkpoint serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }
}

pub fn save_checkpoint(
    path: impl AsRef<Path>,
    net: &DenseNetwork,
    optimizer: Option<&AdamState>,
) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, Checkpoint::capture(net, optimizer).to_json())
        .map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(DenseNetwork, Option<AdamState>)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let format_err = |message| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    Checkpoint::from_json(&text)
        .and_then(|c| c.restore())
        .map_err(format_err)
}
