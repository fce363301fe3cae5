//! Downstream classifiers for scoring feature subsets.

mod forest;
mod logreg;
mod tree;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::Result;

pub use forest::{forest_fit, ForestConfig, ForestModel};
pub use logreg::{logreg_fit, LogRegConfig, LogRegModel};
pub use tree::{tree_fit, DecisionTree, MaxFeatures, Node, TreeConfig};

pub trait Classifier: Send + Sync {
    /// Probability of class 1 for every row.
    fn predict_proba(&self, x: &ArrayView2<f64>) -> Result<Vec<f64>>;
}

impl Classifier for LogRegModel {
    fn predict_proba(&self, x: &ArrayView2<f64>) -> Result<Vec<f64>> {
        LogRegModel::predict_proba(self, x)
    }
}

impl Classifier for ForestModel {
    fn predict_proba(&self, x: &ArrayView2<f64>) -> Result<Vec<f64>> {
        ForestModel::predict_proba(self, x)
    }
}

/// A classifier family with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierSpec {
    Logreg(LogRegConfig),
    Forest(ForestConfig),
}

impl ClassifierSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ClassifierSpec::Logreg(_) => "logreg",
            ClassifierSpec::Forest(_) => "forest",
        }
    }

    pub fn fit(&self, x: &ArrayView2<f64>, y: &[u8]) -> Result<Box<dyn Classifier>> {
        Ok(match self {
            ClassifierSpec::Logreg(cfg) => Box::new(logreg_fit(x, y, cfg)?),
            ClassifierSpec::Forest(cfg) => Box::new(forest_fit(x, y, cfg)?),
        })
    }
}

pub(crate) fn check_labels(n_rows: usize, y: &[u8]) -> Result<()> {
    use crate::Error;
    if n_rows != y.len() {
        return Err(Error::Dimension {
            expected: n_rows,
            found: y.len(),
            context: "labels per row",
        });
    }
    if n_rows == 0 {
        return Err(Error::EmptyDataset);
    }
    Ok(())
}
