//! Classification metrics: confusion counts, precision/recall/F1, ROC/AUC and
//! wall-clock timing.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Probability at or above which a row is predicted as attack.
pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        if self.total() == 0 {
            return 0.0;
        }
        (self.tp + self.tn) as f64 / self.total() as f64
    }
}

pub fn confusion(pred: &[u8], truth: &[u8]) -> Result<ConfusionCounts> {
    if pred.len() != truth.len() {
        return Err(Error::Dimension {
            expected: truth.len(),
            found: pred.len(),
            context: "predictions vs labels",
        });
    }
    let mut c = ConfusionCounts::default();
    for (&p, &t) in pred.iter().zip(truth) {
        match (p != 0, t != 0) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// Hard labels from probabilities at [`DECISION_THRESHOLD`].
pub fn threshold(probs: &[f64]) -> Vec<u8> {
    probs
        .iter()
        .map(|&p| u8::from(p >= DECISION_THRESHOLD))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prf1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when any denominator was zero and the affected value defaulted to 0.
    pub degenerate: bool,
}

pub fn prf1(c: &ConfusionCounts) -> Prf1 {
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            None
        } else {
            Some(num as f64 / den as f64)
        }
    };
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let mut degenerate = precision.is_none() || recall.is_none();
    let (p, r) = (precision.unwrap_or(0.0), recall.unwrap_or(0.0));
    let f1 = if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        degenerate = true;
        0.0
    };
    Prf1 {
        precision: p,
        recall: r,
        f1,
        degenerate,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(fpr, tpr)` from (0, 0) to (1, 1).
    pub points: Vec<(f64, f64)>,
    /// Distinct scores in descending order; point `i + 1` is the curve at
    /// `score >= thresholds[i]`.
    pub thresholds: Vec<f64>,
}

/// ROC curve over distinct score thresholds and its trapezoidal area. Tied
/// scores move as one step, which credits each tied positive/negative pair ½.
pub fn roc_auc(scores: &[f64], truth: &[u8]) -> Result<(RocCurve, f64)> {
    if scores.len() != truth.len() {
        return Err(Error::Dimension {
            expected: truth.len(),
            found: scores.len(),
            context: "scores vs labels",
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("score"));
    }
    let pos = truth.iter().filter(|&&t| t != 0).count() as u64;
    let neg = truth.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let mut thresholds = Vec::new();
    let (mut tp, mut fp) = (0u64, 0u64);
    // Twice the area in units of (1/pos)(1/neg), kept exact.
    let mut area2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (tp0, fp0) = (tp, fp);
        while i < order.len() && scores[order[i]] == s {
            if truth[order[i]] != 0 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        area2 += u128::from(fp - fp0) * u128::from(tp + tp0);
        thresholds.push(s);
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    let auc = area2 as f64 / (2 * u128::from(pos) * u128::from(neg)) as f64;
    Ok((RocCurve { points, thresholds }, auc))
}

/// Runs `op` and returns its result with elapsed monotonic seconds.
pub fn time_block<R>(op: impl FnOnce() -> R) -> (R, f64) {
    let start = Instant::now();
    let out = op();
    (out, start.elapsed().as_secs_f64())
}

/// One evaluated (selector, classifier, k) combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub selector: String,
    pub classifier: String,
    pub k: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: f64,
    pub train_seconds: f64,
}

/// Header of the metric table. Timings live in a separate table so the metric
/// table is reproducible byte for byte.
pub const METRIC_HEADER: &str = "selector,classifier,k,accuracy,precision,recall,f1,auc";
pub const TIMING_HEADER: &str = "selector,classifier,k,train_seconds";

impl MetricRow {
    pub fn from_predictions(
        selector: &str,
        classifier: &str,
        k: usize,
        probs: &[f64],
        truth: &[u8],
        train_seconds: f64,
    ) -> Result<Self> {
        let c = confusion(&threshold(probs), truth)?;
        let p = prf1(&c);
        let (_, auc) = roc_auc(probs, truth)?;
        Ok(Self {
            selector: selector.to_string(),
            classifier: classifier.to_string(),
            k,
            accuracy: c.accuracy(),
            precision: p.precision,
            recall: p.recall,
            f1: p.f1,
            auc,
            train_seconds,
        })
    }

    /// Metric table line (no timing).
    pub fn csv_line(&self) -> String {
        use crate::numfmt::exact;
        format!(
            "{},{},{},{},{},{},{},{}",
            self.selector,
            self.classifier,
            self.k,
            exact(self.accuracy),
            exact(self.precision),
            exact(self.recall),
            exact(self.f1),
            exact(self.auc),
        )
    }

    pub fn timing_line(&self) -> String {
        format!(
            "{},{},{},{}",
            self.selector,
            self.classifier,
            self.k,
            crate::numfmt::exact(self.train_seconds)
        )
    }

    /// Parses a metric table line; `train_seconds` is left at 0.
    pub fn parse_csv_line(line: &str) -> std::result::Result<Self, String> {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 8 {
            return Err(format!("expected 8 cells, got {}", cells.len()));
        }
        let num = |i: usize| {
            cells[i]
                .parse::<f64>()
                .map_err(|e| format!("cell {i}: {e}"))
        };
        Ok(Self {
            selector: cells[0].to_string(),
            classifier: cells[1].to_string(),
            k: cells[2].parse().map_err(|e| format!("k: {e}"))?,
            accuracy: num(3)?,
            precision: num(4)?,
            recall: num(5)?,
            f1: num(6)?,
            auc: num(7)?,
            train_seconds: 0.0,
        })
    }
}
