use ndarray::ArrayView2;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::check_labels;
use super::tree::{fit_rows, DecisionTree, MaxFeatures, TreeConfig};
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features per split; `None` means `ceil(sqrt(d))`.
    pub max_features: Option<usize>,
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_features: None,
            max_depth: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestConfig {
    /// Seed of tree `index`, derived from the forest seed.
    pub fn tree_seed(&self, index: usize) -> u64 {
        rng::derive_seed(self.seed, &format!("tree-{index}"))
    }

    pub fn tree_config(&self) -> TreeConfig {
        TreeConfig {
            max_depth: self.max_depth,
            min_samples_split: 2,
            max_features: self
                .max_features
                .map_or(MaxFeatures::Sqrt, MaxFeatures::Count),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
    pub config: ForestConfig,
}

/// Bagged CART trees, each grown from its own derived seed.
pub fn forest_fit(x: &ArrayView2<f64>, y: &[u8], cfg: &ForestConfig) -> Result<ForestModel> {
    check_labels(x.nrows(), y)?;
    if cfg.n_trees == 0 {
        return Err(Error::Config("n_trees must be >= 1".into()));
    }
    let tree_cfg = cfg.tree_config();
    let n = x.nrows();
    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::seeded(cfg.tree_seed(t));
            let mut rows: Vec<usize> = if cfg.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            fit_rows(x, y, &mut rows, &tree_cfg, &mut rng)
        })
        .collect();
    Ok(ForestModel {
        trees,
        config: *cfg,
    })
}

impl ForestModel {
    /// Mean of the trees' leaf class-1 probabilities.
    pub fn predict_proba(&self, x: &ArrayView2<f64>) -> Result<Vec<f64>> {
        let mut sum = vec![0.0; x.nrows()];
        for tree in &self.trees {
            for (s, p) in sum.iter_mut().zip(tree.predict_proba(x)?) {
                *s += p;
            }
        }
        let k = self.trees.len() as f64;
        Ok(sum.into_iter().map(|s| s / k).collect())
    }

    /// Mean decrease in Gini impurity per feature, normalized to sum to 1.
    /// Each tree's decreases are normalized before averaging.
    pub fn feature_importances(&self) -> Vec<f64> {
        let d = self.trees.first().map_or(0, |t| t.n_features);
        let mut total = vec![0.0; d];
        for tree in &self.trees {
            let dec = tree.impurity_decrease();
            let s: f64 = dec.iter().sum();
            if s > 0.0 {
                for (t, v) in total.iter_mut().zip(dec) {
                    *t += v / s;
                }
            }
        }
        let s: f64 = total.iter().sum();
        if s > 0.0 {
            total.iter_mut().for_each(|v| *v /= s);
        }
        total
    }
}
