//! Flow-record datasets: loading, cleaning, label encoding, min-max scaling,
//! attack filtering, per-group capping, splitting and synthetic fixtures.

mod io;
mod synthetic;

use std::collections::{HashMap, HashSet};

use ndarray::{Array2, Axis};
use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::{Error, Result};

pub use io::{
    load_csv, load_many, read_dataset, read_metadata, write_dataset, write_metadata,
    DatasetMetadata,
};
pub use synthetic::{make_synthetic, SyntheticSpec};

pub const LABEL_COLUMN: &str = "Label";
pub const BENIGN: &str = "BENIGN";

/// Columns removed before modelling when present.
pub const DEFAULT_DROP_COLUMNS: [&str; 6] = [
    "Timestamp",
    "Source IP",
    "Destination IP",
    "Flow ID",
    "SimillarHTTP",
    "Unnamed: 0",
];

pub fn default_drop_columns() -> Vec<String> {
    DEFAULT_DROP_COLUMNS.iter().map(|s| s.to_string()).collect()
}

/// A CSV file as strings. Every row has exactly `headers.len()` cells.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub source: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl RawTable {
    pub fn new(
        source: impl Into<String>,
        headers: Vec<String>,
        rows: Vec<Vec<String>>,
    ) -> Result<Self> {
        let source = source.into();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != headers.len() {
                return Err(Error::RaggedRow {
                    path: source.clone().into(),
                    line: i + 2,
                    expected: headers.len(),
                    found: row.len(),
                });
            }
        }
        let headers = dedupe_headers(headers.iter().map(|h| h.trim().to_string()).collect());
        Ok(Self {
            source,
            headers,
            rows,
        })
    }

    /// Concatenates tables that share one header.
    pub fn concat(tables: Vec<RawTable>) -> Result<RawTable> {
        let mut iter = tables.into_iter();
        let mut first = iter.next().ok_or(Error::EmptyDataset)?;
        for table in iter {
            if table.headers != first.headers {
                return Err(Error::HeaderMismatch {
                    path: table.source.into(),
                });
            }
            first.source = format!("{}+{}", first.source, table.source);
            first.rows.extend(table.rows);
        }
        Ok(first)
    }
}

/// Repeated header names get `.1`, `.2`, ... suffixes, the way pandas reads them.
fn dedupe_headers(headers: Vec<String>) -> Vec<String> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut taken: HashSet<String> = headers.iter().cloned().collect();
    headers
        .into_iter()
        .map(|h| {
            let count = seen.entry(h.clone()).or_insert(0);
            *count += 1;
            if *count == 1 {
                return h;
            }
            let mut k = *count - 1;
            loop {
                let candidate = format!("{h}.{k}");
                if taken.insert(candidate.clone()) {
                    return candidate;
                }
                k += 1;
            }
        })
        .collect()
}

/// Per-column min/max fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub columns: Vec<String>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(features: &Array2<f64>, columns: &[String]) -> Self {
        let mut min = Vec::with_capacity(features.ncols());
        let mut max = Vec::with_capacity(features.ncols());
        for col in features.axis_iter(Axis(1)) {
            let (lo, hi) = col
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                });
            if col.is_empty() {
                min.push(0.0);
                max.push(0.0);
            } else {
                min.push(lo);
                max.push(hi);
            }
        }
        Self {
            columns: columns.to_vec(),
            min,
            max,
        }
    }

    pub fn scale(&self, column: usize, v: f64) -> f64 {
        let (lo, hi) = (self.min[column], self.max[column]);
        if hi > lo {
            ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }

    /// Maps every cell into [0, 1]. Held-out values beyond the fitted range are
    /// clipped; constant columns map to zero.
    pub fn transform(&self, features: &Array2<f64>) -> Result<Array2<f64>> {
        if features.ncols() != self.min.len() {
            return Err(Error::Dimension {
                expected: self.min.len(),
                found: features.ncols(),
                context: "scaler columns",
            });
        }
        let mut out = features.clone();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            col.mapv_inplace(|v| self.scale(j, v));
        }
        Ok(out)
    }
}

/// Numeric flow records with binary labels (0 = benign, 1 = attack).
///
/// `raw_labels` keeps the original label string of every row (attack family,
/// `BENIGN`), which is what per-family capping groups on.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowDataset {
    features: Array2<f64>,
    feature_names: Vec<String>,
    labels: Vec<u8>,
    raw_labels: Vec<String>,
    normalized: bool,
    scaler: Option<MinMaxScaler>,
}

impl FlowDataset {
    pub fn new(
        features: Array2<f64>,
        feature_names: Vec<String>,
        labels: Vec<u8>,
        raw_labels: Vec<String>,
    ) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::Dimension {
                expected: features.nrows(),
                found: labels.len(),
                context: "labels per row",
            });
        }
        if raw_labels.len() != labels.len() {
            return Err(Error::Dimension {
                expected: labels.len(),
                found: raw_labels.len(),
                context: "raw labels per row",
            });
        }
        if features.ncols() != feature_names.len() {
            return Err(Error::Dimension {
                expected: features.ncols(),
                found: feature_names.len(),
                context: "feature names",
            });
        }
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateFeature(name.clone()));
            }
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::Config("labels must be 0 or 1".into()));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature cell"));
        }
        Ok(Self {
            features,
            feature_names,
            labels,
            raw_labels,
            normalized: false,
            scaler: None,
        })
    }

    /// Marks an already-scaled matrix as normalized, e.g. when reading a stored split.
    pub fn with_scaler(mut self, scaler: MinMaxScaler) -> Result<Self> {
        if self.features.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Config(
                "normalized dataset has cells outside [0, 1]".into(),
            ));
        }
        self.normalized = true;
        self.scaler = Some(scaler);
        Ok(self)
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn raw_labels(&self) -> &[String] {
        &self.raw_labels
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn scaler(&self) -> Option<&MinMaxScaler> {
        self.scaler.as_ref()
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - ones, ones]
    }

    /// Rows at `indices`, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> FlowDataset {
        FlowDataset {
            features: self.features.select(Axis(0), indices),
            feature_names: self.feature_names.clone(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            raw_labels: indices
                .iter()
                .map(|&i| self.raw_labels[i].clone())
                .collect(),
            normalized: self.normalized,
            scaler: self.scaler.clone(),
        }
    }

    /// Feature columns at `indices`, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> Result<FlowDataset> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n_features()) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: self.n_features(),
            });
        }
        let scaler = self.scaler.as_ref().map(|s| MinMaxScaler {
            columns: indices.iter().map(|&i| s.columns[i].clone()).collect(),
            min: indices.iter().map(|&i| s.min[i]).collect(),
            max: indices.iter().map(|&i| s.max[i]).collect(),
        });
        Ok(FlowDataset {
            features: self.features.select(Axis(1), indices),
            feature_names: indices
                .iter()
                .map(|&i| self.feature_names[i].clone())
                .collect(),
            labels: self.labels.clone(),
            raw_labels: self.raw_labels.clone(),
            normalized: self.normalized,
            scaler,
        })
    }

    /// Renders the dataset back into string form with the label column last.
    pub fn to_raw(&self) -> RawTable {
        let mut headers = self.feature_names.clone();
        headers.push(LABEL_COLUMN.to_string());
        let rows = self
            .features
            .outer_iter()
            .zip(&self.raw_labels)
            .map(|(row, label)| {
                let mut cells: Vec<String> = row.iter().map(|&v| crate::numfmt::exact(v)).collect();
                cells.push(label.clone());
                cells
            })
            .collect();
        RawTable {
            source: "<dataset>".into(),
            headers,
            rows,
        }
    }
}

/// Parses a numeric cell. Infinite, NaN and empty cells become 0.
fn parse_cell(cell: &str) -> Option<f64> {
    let t = cell.trim();
    if t.is_empty() {
        return Some(0.0);
    }
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Some(v),
        Ok(_) => Some(0.0),
        Err(_) => None,
    }
}

/// Drops identifier columns, parses numeric cells, and encodes the label
/// (`BENIGN` → 0, anything else → 1).
pub fn preprocess(raw: &RawTable, drop_cols: &[String]) -> Result<FlowDataset> {
    let label_idx = raw
        .headers
        .iter()
        .position(|h| h == LABEL_COLUMN)
        .ok_or_else(|| Error::MissingLabel {
            column: LABEL_COLUMN.to_string(),
            source_name: raw.source.clone(),
        })?;
    let drop: HashSet<&str> = drop_cols.iter().map(|s| s.trim()).collect();
    let keep: Vec<usize> = (0..raw.headers.len())
        .filter(|&j| j != label_idx && !drop.contains(raw.headers[j].as_str()))
        .collect();

    let n = raw.rows.len();
    let mut features = Array2::<f64>::zeros((n, keep.len()));
    let mut labels = Vec::with_capacity(n);
    let mut raw_labels = Vec::with_capacity(n);
    for (i, row) in raw.rows.iter().enumerate() {
        for (k, &j) in keep.iter().enumerate() {
            features[[i, k]] = parse_cell(&row[j]).ok_or_else(|| Error::BadCell {
                column: raw.headers[j].clone(),
                row: i + 1,
                value: row[j].clone(),
            })?;
        }
        let label = row[label_idx].trim();
        labels.push(u8::from(label != BENIGN));
        raw_labels.push(label.to_string());
    }
    let names = keep.iter().map(|&j| raw.headers[j].clone()).collect();
    FlowDataset::new(features, names, labels, raw_labels)
}

/// Fits a min-max scaler on `ds` and applies it.
pub fn normalize(ds: &FlowDataset) -> Result<FlowDataset> {
    if ds.normalized {
        return Err(Error::AlreadyNormalized);
    }
    let scaler = MinMaxScaler::fit(&ds.features, &ds.feature_names);
    apply_scaler(ds, &scaler)
}

/// Applies a previously fitted scaler, e.g. the training scaler to test rows.
pub fn apply_scaler(ds: &FlowDataset, scaler: &MinMaxScaler) -> Result<FlowDataset> {
    if ds.normalized {
        return Err(Error::AlreadyNormalized);
    }
    if scaler.columns != ds.feature_names {
        return Err(Error::Config(
            "scaler columns do not match dataset columns".into(),
        ));
    }
    let mut out = ds.clone();
    out.features = scaler.transform(&ds.features)?;
    out.normalized = true;
    out.scaler = Some(scaler.clone());
    Ok(out)
}

/// Keeps attack rows (label 1) in their original order.
pub fn filter_attacks(ds: &FlowDataset) -> Result<FlowDataset> {
    let idx: Vec<usize> = (0..ds.n_rows()).filter(|&i| ds.labels[i] == 1).collect();
    if idx.is_empty() {
        return Err(Error::NoAttackRows);
    }
    Ok(ds.select_rows(&idx))
}

/// What `cap_per_class` groups rows by.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKey {
    /// The original label string (attack family or `BENIGN`).
    RawLabel,
    /// The binary label.
    Label,
    /// Exact value of a feature column.
    Column(String),
}

/// Uniformly subsamples each group down to at most `cap` rows. Kept rows
/// retain their original relative order.
pub fn cap_per_class(
    ds: &FlowDataset,
    cap: usize,
    key: &GroupKey,
    seed: u64,
) -> Result<FlowDataset> {
    if cap == 0 {
        return Err(Error::Config("cap must be positive".into()));
    }
    let column = match key {
        GroupKey::Column(name) => Some(
            ds.feature_names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::Config(format!("unknown group column `{name}`")))?,
        ),
        _ => None,
    };
    let key_of = |i: usize| -> String {
        match (key, column) {
            (GroupKey::RawLabel, _) => ds.raw_labels[i].clone(),
            (GroupKey::Label, _) => ds.labels[i].to_string(),
            (GroupKey::Column(_), Some(j)) => ds.features[[i, j]].to_bits().to_string(),
            (GroupKey::Column(_), None) => unreachable!(),
        }
    };

    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<usize>> = HashMap::new();
    for i in 0..ds.n_rows() {
        let k = key_of(i);
        groups
            .entry(k.clone())
            .or_insert_with(|| {
                order.push(k);
                Vec::new()
            })
            .push(i);
    }

    let mut rng = rng::seeded(seed);
    let mut keep = Vec::with_capacity(ds.n_rows().min(cap * order.len()));
    for k in &order {
        let members = &groups[k];
        if members.len() <= cap {
            keep.extend_from_slice(members);
        } else {
            keep.extend(
                index::sample(&mut rng, members.len(), cap)
                    .into_iter()
                    .map(|p| members[p]),
            );
        }
    }
    keep.sort_unstable();
    Ok(ds.select_rows(&keep))
}

/// Train/test partitioning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub stratified: bool,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            stratified: true,
            seed: 0,
        }
    }
}

fn train_count(n: usize, fraction: f64) -> usize {
    ((n as f64 * fraction).round() as usize).clamp(1, n - 1)
}

/// Splits into disjoint, exhaustive train and test partitions. Both keep the
/// original row order.
pub fn split(ds: &FlowDataset, spec: &SplitSpec) -> Result<(FlowDataset, FlowDataset)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train_fraction must lie in (0, 1), got {}",
            spec.train_fraction
        )));
    }
    let n = ds.n_rows();
    if n < 2 {
        return Err(Error::Config("need at least 2 rows to split".into()));
    }
    let mut rng = rng::seeded(spec.seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    let strata: Vec<Vec<usize>> = if spec.stratified {
        (0u8..=1)
            .map(|c| (0..n).filter(|&i| ds.labels[i] == c).collect::<Vec<_>>())
            .filter(|members| !members.is_empty())
            .collect()
    } else {
        vec![(0..n).collect()]
    };
    for mut members in strata {
        if members.len() < 2 {
            return Err(Error::ClassTooSmall {
                label: ds.labels[members[0]],
                count: members.len(),
            });
        }
        members.shuffle(&mut rng);
        let cut = train_count(members.len(), spec.train_fraction);
        train.extend_from_slice(&members[..cut]);
        test.extend_from_slice(&members[cut..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((ds.select_rows(&train), ds.select_rows(&test)))
}

#[cfg(test)]
mod tests;
