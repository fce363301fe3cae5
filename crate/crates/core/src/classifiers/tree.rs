use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::check_labels;
use crate::rng::Rng;
use crate::{Error, Result};

/// Features examined per split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    All,
    /// `ceil(sqrt(d))`.
    Sqrt,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, d: usize) -> usize {
        match self {
            MaxFeatures::All => d,
            MaxFeatures::Sqrt => ((d as f64).sqrt().ceil() as usize).max(1),
            MaxFeatures::Count(k) => k.clamp(1, d.max(1)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub max_features: MaxFeatures,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_split: 2,
            max_features: MaxFeatures::All,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        n_samples: usize,
        impurity: f64,
    },
    Leaf {
        /// Fraction of class-1 rows reaching the leaf.
        prob: f64,
        n_samples: usize,
        impurity: f64,
    },
}

impl Node {
    fn n_samples(&self) -> usize {
        match *self {
            Node::Split { n_samples, .. } | Node::Leaf { n_samples, .. } => n_samples,
        }
    }

    fn impurity(&self) -> f64 {
        match *self {
            Node::Split { impurity, .. } | Node::Leaf { impurity, .. } => impurity,
        }
    }
}

/// CART tree over Gini impurity. Node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub n_features: usize,
}

fn gini(c0: usize, c1: usize) -> f64 {
    let n = (c0 + c1) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let (p0, p1) = (c0 as f64 / n, c1 as f64 / n);
    1.0 - p0 * p0 - p1 * p1
}

/// `Σ_children (c0² + c1²) / n_child`; larger means lower weighted Gini.
fn purity_proxy(l0: usize, l1: usize, r0: usize, r1: usize) -> f64 {
    let side = |a: usize, b: usize| {
        let n = (a + b) as f64;
        ((a * a + b * b) as f64) / n
    };
    side(l0, l1) + side(r0, r1)
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    proxy: f64,
}

struct Builder<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [u8],
    cfg: &'a TreeConfig,
    max_features: usize,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn build(&mut self, rows: &mut [usize], depth: usize, rng: &mut Rng) -> usize {
        let c1 = rows.iter().filter(|&&i| self.y[i] == 1).count();
        let c0 = rows.len() - c1;
        let impurity = gini(c0, c1);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            prob: c1 as f64 / rows.len() as f64,
            n_samples: rows.len(),
            impurity,
        });
        let depth_ok = self.cfg.max_depth.is_none_or(|m| depth < m);
        if c0 == 0 || c1 == 0 || rows.len() < self.cfg.min_samples_split || !depth_ok {
            return id;
        }
        let Some(choice) = self.best_split(rows, c0, c1, rng) else {
            return id;
        };
        let (feature, threshold) = (choice.feature, choice.threshold);
        let mid = partition(rows, |i| self.x[[i, feature]] <= threshold);
        let (left_rows, right_rows) = rows.split_at_mut(mid);
        let left = self.build(left_rows, depth + 1, rng);
        let right = self.build(right_rows, depth + 1, rng);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
            n_samples: mid + right_rows.len(),
            impurity,
        };
        id
    }

    /// Best impurity-reducing split. Features are visited in random order; the
    /// search stops after `max_features` of them unless none has produced a
    /// reducing split yet.
    fn best_split(
        &self,
        rows: &[usize],
        c0: usize,
        c1: usize,
        rng: &mut Rng,
    ) -> Option<SplitChoice> {
        let n = rows.len();
        let parent = ((c0 * c0 + c1 * c1) as f64) / n as f64;
        let mut features: Vec<usize> = (0..self.x.ncols()).collect();
        features.shuffle(rng);
        let mut best: Option<SplitChoice> = None;
        let mut pairs: Vec<(f64, u8)> = Vec::with_capacity(n);
        for (visited, &f) in features.iter().enumerate() {
            if visited >= self.max_features && best.is_some() {
                break;
            }
            pairs.clear();
            pairs.extend(rows.iter().map(|&i| (self.x[[i, f]], self.y[i])));
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (mut l0, mut l1) = (0usize, 0usize);
            for k in 0..n - 1 {
                if pairs[k].1 == 1 {
                    l1 += 1;
                } else {
                    l0 += 1;
                }
                let (lo, hi) = (pairs[k].0, pairs[k + 1].0);
                if lo == hi {
                    continue;
                }
                let proxy = purity_proxy(l0, l1, c0 - l0, c1 - l1);
                if proxy <= parent * (1.0 + 1e-12) {
                    continue;
                }
                if best.as_ref().is_none_or(|b| proxy > b.proxy) {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some(SplitChoice {
                        feature: f,
                        threshold,
                        proxy,
                    });
                }
            }
        }
        best
    }
}

/// Stable-order-agnostic in-place partition; returns the count satisfying `pred`.
fn partition(rows: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let mut mid = 0;
    for k in 0..rows.len() {
        if pred(rows[k]) {
            rows.swap(mid, k);
            mid += 1;
        }
    }
    mid
}

/// Grows a tree on the rows listed in `rows` (repeats allowed, as in a bootstrap).
pub(crate) fn fit_rows(
    x: &ArrayView2<f64>,
    y: &[u8],
    rows: &mut [usize],
    cfg: &TreeConfig,
    rng: &mut Rng,
) -> DecisionTree {
    let mut builder = Builder {
        x: x.view(),
        y,
        cfg,
        max_features: cfg.max_features.resolve(x.ncols()),
        nodes: Vec::new(),
    };
    builder.build(rows, 0, rng);
    DecisionTree {
        nodes: builder.nodes,
        n_features: x.ncols(),
    }
}

pub fn tree_fit(
    x: &ArrayView2<f64>,
    y: &[u8],
    cfg: &TreeConfig,
    rng: &mut Rng,
) -> Result<DecisionTree> {
    check_labels(x.nrows(), y)?;
    let mut rows: Vec<usize> = (0..x.nrows()).collect();
    Ok(fit_rows(x, y, &mut rows, cfg, rng))
}

impl DecisionTree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf { prob, .. } => return prob,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    id = if row[feature] <= threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn predict_proba(&self, x: &ArrayView2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features {
            return Err(Error::Dimension {
                expected: self.n_features,
                found: x.ncols(),
                context: "tree input width",
            });
        }
        Ok(x.outer_iter()
            .map(|r| match r.as_slice() {
                Some(s) => self.predict_row(s),
                None => self.predict_row(&r.to_vec()),
            })
            .collect())
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Total weighted Gini decrease per feature (unnormalized).
    pub fn impurity_decrease(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_features];
        for node in &self.nodes {
            if let Node::Split {
                feature,
                left,
                right,
                n_samples,
                impurity,
                ..
            } = *node
            {
                let (l, r) = (&self.nodes[left], &self.nodes[right]);
                out[feature] += n_samples as f64 * impurity
                    - l.n_samples() as f64 * l.impurity()
                    - r.n_samples() as f64 * r.impurity();
            }
        }
        out
    }
}
