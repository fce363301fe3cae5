//! Classical feature selectors used as comparators: mutual information,
//! chi-square and ANOVA F filters, random-forest impurity importance and
//! recursive feature elimination.

mod filters;
mod wrapper;

use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifiers::{forest_fit, ForestConfig, LogRegConfig};
use crate::flow_data::FlowDataset;
use crate::sensitivity::{rank_descending, ranking_csv};
use crate::{Error, Result};

pub use filters::{
    anova_f, anova_f_groups, chi_square, chi_square_from_counts, contingency, mutual_information,
    mutual_information_from_counts,
};
pub use wrapper::{rfe, RfeEstimator, RfeResult};

pub const SCORE_HEADER: &str = "S.No.,Feature,Score";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinStrategy {
    EqualWidth,
}

/// Discretization for the MI and chi-square filters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BinningSpec {
    pub bins: usize,
    pub strategy: BinStrategy,
}

impl Default for BinningSpec {
    fn default() -> Self {
        Self {
            bins: 10,
            strategy: BinStrategy::EqualWidth,
        }
    }
}

impl BinningSpec {
    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 {
            return Err(Error::Config("binning needs at least 2 bins".into()));
        }
        Ok(())
    }
}

/// Per-feature scores from one selector, with a stable descending ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScoreTable {
    pub method: String,
    pub feature_names: Vec<String>,
    pub scores: Vec<f64>,
    pub ranking: Vec<usize>,
}

impl FeatureScoreTable {
    pub fn new(method: impl Into<String>, feature_names: Vec<String>, scores: Vec<f64>) -> Self {
        assert_eq!(feature_names.len(), scores.len());
        let ranking = rank_descending(&scores);
        Self {
            method: method.into(),
            feature_names,
            scores,
            ranking,
        }
    }

    pub fn top_k(&self, k: usize) -> Result<Vec<usize>> {
        if k == 0 || k > self.ranking.len() {
            return Err(Error::Config(format!(
                "k = {k} outside 1..={}",
                self.ranking.len()
            )));
        }
        Ok(self.ranking[..k].to_vec())
    }

    pub fn to_csv(&self) -> String {
        ranking_csv(
            SCORE_HEADER,
            self.ranking
                .iter()
                .map(|&i| (self.feature_names[i].clone(), self.scores[i])),
        )
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(self.to_csv().as_bytes()))
            .map_err(|e| Error::io(path, e))
    }
}

pub(crate) fn require_both_classes(ds: &FlowDataset) -> Result<()> {
    let [benign, attack] = ds.class_counts();
    if benign == 0 || attack == 0 {
        return Err(Error::SingleClass);
    }
    Ok(())
}

/// Mean decrease in Gini impurity from a freshly fitted forest.
pub fn rf_importance(ds: &FlowDataset, forest_cfg: &ForestConfig) -> Result<FeatureScoreTable> {
    require_both_classes(ds)?;
    let forest = forest_fit(&ds.features().view(), ds.labels(), forest_cfg)?;
    Ok(FeatureScoreTable::new(
        "rf",
        ds.feature_names().to_vec(),
        forest.feature_importances(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMethod {
    Mi,
    Chi2,
    Anova,
    Rfe,
    Rf,
}

impl BaselineMethod {
    pub const ALL: [BaselineMethod; 5] = [
        BaselineMethod::Mi,
        BaselineMethod::Chi2,
        BaselineMethod::Anova,
        BaselineMethod::Rfe,
        BaselineMethod::Rf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineMethod::Mi => "mi",
            BaselineMethod::Chi2 => "chi2",
            BaselineMethod::Anova => "anova",
            BaselineMethod::Rfe => "rfe",
            BaselineMethod::Rf => "rf",
        }
    }
}

impl FromStr for BaselineMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaselineMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

impl std::fmt::Display for BaselineMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Settings shared by all baseline selectors.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    pub binning: BinningSpec,
    pub forest: ForestConfig,
    pub rfe_logreg: LogRegConfig,
}

/// Scores every feature with `method`. RFE runs down to a single survivor so
/// that its elimination order ranks all features.
pub fn run_baseline(
    method: BaselineMethod,
    ds: &FlowDataset,
    cfg: &BaselineConfig,
) -> Result<FeatureScoreTable> {
    match method {
        BaselineMethod::Mi => mutual_information(ds, &cfg.binning),
        BaselineMethod::Chi2 => chi_square(ds, &cfg.binning),
        BaselineMethod::Anova => anova_f(ds),
        BaselineMethod::Rf => rf_importance(ds, &cfg.forest),
        BaselineMethod::Rfe => {
            Ok(rfe(ds, 1, &RfeEstimator::Logreg(cfg.rfe_logreg))?.score_table(ds.feature_names()))
        }
    }
}
