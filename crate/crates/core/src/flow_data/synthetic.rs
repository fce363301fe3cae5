use ndarray::Array2;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{FlowDataset, BENIGN};
use crate::{rng, Error, Result};

/// Raw label carried by synthetic attack rows.
pub const SYNTHETIC_ATTACK: &str = "DrDoS_Synthetic";

/// Desk-scale stand-in for a flow capture with a known set of informative features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_attack: usize,
    pub n_benign: usize,
    pub d: usize,
    pub informative: Vec<usize>,
    pub noise_scale: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_attack: 5000,
            n_benign: 5000,
            d: 20,
            informative: vec![0, 1, 2, 3],
            noise_scale: 1.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_attack == 0 || self.n_benign == 0 || self.d == 0 {
            return Err(Error::Config(
                "synthetic counts and d must be positive".into(),
            ));
        }
        if let Some(&bad) = self.informative.iter().find(|&&i| i >= self.d) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: self.d,
            });
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::Config("noise_scale must be finite and >= 0".into()));
        }
        Ok(())
    }

    /// Mean offset of attack rows on informative features.
    pub fn separation(&self) -> f64 {
        1.0 + 4.0 * self.noise_scale
    }

    pub fn feature_names(&self) -> Vec<String> {
        let width = (self.d.max(2) - 1).to_string().len().max(2);
        (0..self.d).map(|j| format!("f{j:0width$}")).collect()
    }
}

/// Generates a labelled, unnormalized dataset.
///
/// Informative features are count-like: `round(N(mu, s))` with `mu = 0` for
/// benign rows and `mu = 1 + 4s` for attack rows, `s = noise_scale`. All other
/// features are continuous `N(0, s)` draws shared by both classes. Rows are
/// shuffled.
pub fn make_synthetic(spec: &SyntheticSpec) -> Result<FlowDataset> {
    spec.validate()?;
    let mut rng = rng::seeded(spec.seed);
    let n = spec.n_attack + spec.n_benign;
    let noise = Normal::new(0.0, spec.noise_scale).map_err(|e| Error::Config(e.to_string()))?;
    let mut informative = vec![false; spec.d];
    for &i in &spec.informative {
        informative[i] = true;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    let mut features = Array2::<f64>::zeros((n, spec.d));
    let mut labels = vec![0u8; n];
    let mut raw_labels = vec![String::new(); n];
    for (src, &dst) in order.iter().enumerate() {
        let attack = src < spec.n_attack;
        let shift = if attack { spec.separation() } else { 0.0 };
        for j in 0..spec.d {
            let z = noise.sample(&mut rng);
            features[[dst, j]] = if informative[j] {
                (shift + z).round()
            } else {
                z
            };
        }
        labels[dst] = u8::from(attack);
        raw_labels[dst] = if attack { SYNTHETIC_ATTACK } else { BENIGN }.to_string();
    }
    // round() can yield -0.0; keep the serialized form canonical.
    features.mapv_inplace(|v| if v == 0.0 { 0.0 } else { v });
    FlowDataset::new(features, spec.feature_names(), labels, raw_labels)
}
