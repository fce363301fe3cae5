//! Discriminator sensitivity ranking.
//!
//! Every feature gets a base step: the mean of the non-zero gaps between its
//! consecutive sorted values over the attack rows. Each sampled row is then
//! nudged up and down along that feature by `factor × base step` (clipped to
//! [0, 1]) for every factor, and the absolute change in discriminator
//! confidence is averaged over rows, factors and both directions:
//!
//! ```text
//! score_i = 1 / (N · K · 2) · Σ_rows Σ_factors ( |D(x) − D(x⁺)| + |D(x) − D(x⁻)| )
//! ```
//!
//! The baseline `D(x)` is evaluated once per row.

use std::io::Write;
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::neural::DenseNetwork;
use crate::numfmt;
use crate::rng;
use crate::{Error, Result};

pub const DEFAULT_FACTORS: [f64; 5] = [0.5, 1.0, 2.0, 5.0, 10.0];
pub const DEFAULT_SAMPLE_CAP: usize = 10_000;
/// Header of the ranking CSV.
pub const RANKING_HEADER: &str = "S.No.,Feature,Sensitivity_Score";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbConfig {
    pub factors: Vec<f64>,
    /// Upper bound on rows scored; `None` scores every row.
    pub sample_cap: Option<usize>,
    pub seed: u64,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        Self {
            factors: DEFAULT_FACTORS.to_vec(),
            sample_cap: Some(DEFAULT_SAMPLE_CAP),
            seed: 0,
        }
    }
}

impl PerturbConfig {
    pub fn validate(&self) -> Result<()> {
        if self.factors.is_empty() || self.factors.iter().any(|&f| !(f > 0.0 && f.is_finite())) {
            return Err(Error::Config(
                "perturbation factors must be non-empty and > 0".into(),
            ));
        }
        if self.sample_cap == Some(0) {
            return Err(Error::Config("sample_cap must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-feature characteristic step sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseDeltas {
    pub delta: Vec<f64>,
}

/// Mean non-zero gap between consecutive sorted values, per column. Constant
/// columns get 0.
pub fn compute_base_deltas(data: &ArrayView2<f64>) -> Result<BaseDeltas> {
    if data.nrows() < 2 {
        return Err(Error::Config(format!(
            "base deltas need at least 2 rows, got {}",
            data.nrows()
        )));
    }
    let delta = data
        .axis_iter(Axis(1))
        .map(|col| {
            let mut values = col.to_vec();
            values.sort_by(f64::total_cmp);
            let (sum, count) = values
                .windows(2)
                .map(|w| w[1] - w[0])
                .filter(|&gap| gap != 0.0)
                .fold((0.0, 0usize), |(s, c), gap| (s + gap, c + 1));
            if count == 0 {
                0.0
            } else {
                sum / count as f64
            }
        })
        .collect();
    Ok(BaseDeltas { delta })
}

/// Copy of `x` with coordinate `i` moved by `direction × delta` and clipped to [0, 1].
pub fn perturb_feature(x: &[f64], i: usize, delta: f64, direction: f64) -> Result<Vec<f64>> {
    if i >= x.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: x.len(),
        });
    }
    let mut out = x.to_vec();
    out[i] = (x[i] + direction * delta).clamp(0.0, 1.0);
    Ok(out)
}

/// Scores and ranking of one sensitivity run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub feature_names: Vec<String>,
    pub scores: Vec<f64>,
    /// Feature indices by descending score; ties keep ascending index order.
    pub ranking: Vec<usize>,
    pub n_samples: usize,
    pub factors: Vec<f64>,
}

/// Indices sorted by descending score, ties by ascending index.
pub fn rank_descending(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

impl SensitivityReport {
    pub fn from_scores(feature_names: Vec<String>, scores: Vec<f64>) -> Result<Self> {
        if feature_names.len() != scores.len() {
            return Err(Error::Dimension {
                expected: feature_names.len(),
                found: scores.len(),
                context: "scores per feature",
            });
        }
        let ranking = rank_descending(&scores);
        Ok(Self {
            feature_names,
            scores,
            ranking,
            n_samples: 0,
            factors: Vec::new(),
        })
    }

    pub fn rank_rows(&self) -> Vec<RankedFeature> {
        rank_report(self)
    }

    pub fn select_top_k(&self, k: usize) -> Result<Vec<usize>> {
        select_top_k(self, k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedFeature {
    pub rank: usize,
    pub index: usize,
    pub name: String,
    pub score: f64,
}

/// Rows in rank order, 1-based.
pub fn rank_report(report: &SensitivityReport) -> Vec<RankedFeature> {
    report
        .ranking
        .iter()
        .enumerate()
        .map(|(r, &i)| RankedFeature {
            rank: r + 1,
            index: i,
            name: report.feature_names[i].clone(),
            score: report.scores[i],
        })
        .collect()
}

pub fn select_top_k(report: &SensitivityReport, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > report.ranking.len() {
        return Err(Error::Config(format!(
            "k = {k} outside 1..={}",
            report.ranking.len()
        )));
    }
    Ok(report.ranking[..k].to_vec())
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Ranking table with scores at 9 significant digits.
pub fn ranking_csv(header: &str, rows: impl IntoIterator<Item = (String, f64)>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for (i, (name, score)) in rows.into_iter().enumerate() {
        out.push_str(&format!(
            "{},{},{}\n",
            i + 1,
            quote(&name),
            numfmt::sig(score, 9)
        ));
    }
    out
}

pub fn write_ranking_csv(path: impl AsRef<Path>, report: &SensitivityReport) -> Result<()> {
    let path = path.as_ref();
    let text = ranking_csv(
        RANKING_HEADER,
        rank_report(report).into_iter().map(|r| (r.name, r.score)),
    );
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(text.as_bytes()))
        .map_err(|e| Error::io(path, e))
}

/// Row indices scored: all rows when within the cap, else a seeded uniform
/// subsample (in ascending order).
pub fn sample_rows(n: usize, cap: Option<usize>, seed: u64) -> Vec<usize> {
    match cap {
        Some(cap) if cap < n => {
            let mut idx = index::sample(&mut rng::seeded(seed), n, cap).into_vec();
            idx.sort_unstable();
            idx
        }
        _ => (0..n).collect(),
    }
}

fn confidences(disc: &DenseNetwork, x: &ArrayView2<f64>) -> Result<Vec<f64>> {
    let out = disc.forward(x)?;
    let col: Vec<f64> = out.column(0).to_vec();
    if col.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("discriminator output"));
    }
    Ok(col)
}

/// Sensitivity of `disc` to every feature of `attack_data`.
pub fn sensitivity_scores(
    disc: &DenseNetwork,
    attack_data: &ArrayView2<f64>,
    deltas: &BaseDeltas,
    cfg: &PerturbConfig,
    feature_names: &[String],
) -> Result<SensitivityReport> {
    cfg.validate()?;
    let d = attack_data.ncols();
    if attack_data.nrows() == 0 {
        return Err(Error::EmptyDataset);
    }
    if disc.input_size() != d {
        return Err(Error::Dimension {
            expected: disc.input_size(),
            found: d,
            context: "discriminator input vs data width",
        });
    }
    if disc.output_size() != 1 {
        return Err(Error::Dimension {
            expected: 1,
            found: disc.output_size(),
            context: "discriminator output width",
        });
    }
    if deltas.delta.len() != d || feature_names.len() != d {
        return Err(Error::Dimension {
            expected: d,
            found: deltas.delta.len().min(feature_names.len()),
            context: "deltas and names per feature",
        });
    }

    let rows = sample_rows(attack_data.nrows(), cfg.sample_cap, cfg.seed);
    let sample: Array2<f64> = attack_data.select(Axis(0), &rows);
    let baseline = confidences(disc, &sample.view())?;
    let terms = (rows.len() * cfg.factors.len() * 2) as f64;

    let scores = (0..d)
        .into_par_iter()
        .map(|i| {
            feature_score(disc, &sample, &baseline, i, deltas.delta[i], &cfg.factors)
                .map(|s| s / terms)
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut report = SensitivityReport::from_scores(feature_names.to_vec(), scores)?;
    report.n_samples = rows.len();
    report.factors = cfg.factors.clone();
    Ok(report)
}

/// Sum of confidence shifts for one feature, in (factor, direction, row) order.
fn feature_score(
    disc: &DenseNetwork,
    sample: &Array2<f64>,
    baseline: &[f64],
    i: usize,
    base_delta: f64,
    factors: &[f64],
) -> Result<f64> {
    if base_delta == 0.0 {
        return Ok(0.0);
    }
    let original = sample.column(i).to_owned();
    let mut perturbed = sample.clone();
    let mut total = 0.0;
    for &f in factors {
        let step = f * base_delta;
        for direction in [1.0, -1.0] {
            perturbed.column_mut(i).zip_mut_with(&original, |v, &x| {
                *v = (x + direction * step).clamp(0.0, 1.0)
            });
            let shifted = confidences(disc, &perturbed.view())?;
            total += baseline
                .iter()
                .zip(&shifted)
                .map(|(b, s)| (b - s).abs())
                .sum::<f64>();
        }
    }
    Ok(total)
}
