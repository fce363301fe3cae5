use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use super::{require_both_classes, FeatureScoreTable};
use crate::classifiers::{forest_fit, logreg_fit, ForestConfig, LogRegConfig};
use crate::flow_data::FlowDataset;
use crate::{Error, Result};

/// Model whose per-feature weights drive elimination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RfeEstimator {
    /// |coefficient| of a logistic regression on standardized features.
    Logreg(LogRegConfig),
    /// Forest impurity importance.
    Forest(ForestConfig),
}

impl Default for RfeEstimator {
    fn default() -> Self {
        RfeEstimator::Logreg(LogRegConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfeResult {
    /// Surviving feature indices, ascending.
    pub selected: Vec<usize>,
    /// Removed features in the order they were eliminated.
    pub eliminated: Vec<usize>,
}

impl RfeResult {
    /// Scores for a full ranking: the `t`-th eliminated feature (0-based) scores
    /// `(t + 1) / d`; survivors score 1.
    pub fn score_table(&self, names: &[String]) -> FeatureScoreTable {
        let d = names.len() as f64;
        let mut scores = vec![1.0; names.len()];
        for (t, &f) in self.eliminated.iter().enumerate() {
            scores[f] = (t + 1) as f64 / d;
        }
        FeatureScoreTable::new("rfe", names.to_vec(), scores)
    }
}

fn standardize(x: &Array2<f64>) -> Array2<f64> {
    let mut out = x.clone();
    for mut col in out.axis_iter_mut(Axis(1)) {
        let n = col.len() as f64;
        let mean = col.sum() / n;
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        if sd > 0.0 {
            col.mapv_inplace(|v| (v - mean) / sd);
        } else {
            col.fill(0.0);
        }
    }
    out
}

/// Per-feature weight magnitudes of `estimator` fitted on the given columns.
fn weights(ds: &FlowDataset, columns: &[usize], estimator: &RfeEstimator) -> Result<Vec<f64>> {
    let x = ds.features().select(Axis(1), columns);
    match estimator {
        RfeEstimator::Logreg(cfg) => {
            let model = logreg_fit(&standardize(&x).view(), ds.labels(), cfg)?;
            Ok(model.weights.iter().map(|w| w.abs()).collect())
        }
        RfeEstimator::Forest(cfg) => {
            Ok(forest_fit(&x.view(), ds.labels(), cfg)?.feature_importances())
        }
    }
}

/// Recursive feature elimination, one feature per round, until `target_k`
/// remain. Ties on the smallest weight remove the lowest feature index.
pub fn rfe(ds: &FlowDataset, target_k: usize, estimator: &RfeEstimator) -> Result<RfeResult> {
    let d = ds.n_features();
    if target_k == 0 || target_k > d {
        return Err(Error::Config(format!(
            "target_k = {target_k} outside 1..={d}"
        )));
    }
    require_both_classes(ds)?;
    let mut remaining: Vec<usize> = (0..d).collect();
    let mut eliminated = Vec::with_capacity(d - target_k);
    while remaining.len() > target_k {
        let w = weights(ds, &remaining, estimator)?;
        let (pos, _) = w
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1).then(remaining[a.0].cmp(&remaining[b.0])))
            .expect("non-empty");
        eliminated.push(remaining.remove(pos));
    }
    Ok(RfeResult {
        selected: remaining,
        eliminated,
    })
}
