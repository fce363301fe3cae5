//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use ganfs_core::neural::{Activation, DenseNetwork};
use ganfs_core::rng::{self, Rng};
use rand::Rng as _;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// Published CIC-DDoS2019 sensitivity ranking as `(feature, score)` in listed order.
pub fn reference_ranking() -> Vec<(String, f64)> {
    let text = std::fs::read_to_string(fixture("reference_ranking.csv")).unwrap();
    text.lines()
        .skip(1)
        .map(|l| {
            let cells: Vec<&str> = l.split(',').collect();
            (cells[1].to_string(), cells[2].parse().unwrap())
        })
        .collect()
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Scalar-loop forward pass of a single-output network.
pub fn naive_forward(net: &DenseNetwork, x: &[f64]) -> f64 {
    let mut a = x.to_vec();
    for layer in net.layers() {
        let mut next = Vec::with_capacity(layer.outputs());
        for o in 0..layer.outputs() {
            let mut z = layer.biases[o];
            for (i, &ai) in a.iter().enumerate() {
                z += layer.weights[[o, i]] * ai;
            }
            next.push(match layer.activation {
                Activation::Relu => z.max(0.0),
                Activation::Sigmoid => sigmoid(z),
            });
        }
        a = next;
    }
    a[0]
}

pub fn base_delta_oracle(col: &[f64]) -> f64 {
    let mut v = col.to_vec();
    v.sort_by(f64::total_cmp);
    let gaps: Vec<f64> = v
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&g| g != 0.0)
        .collect();
    if gaps.is_empty() {
        0.0
    } else {
        gaps.iter().sum::<f64>() / gaps.len() as f64
    }
}

/// Direct triple loop over rows, factors and directions, re-evaluating the
/// unperturbed confidence for every term.
pub fn sensitivity_oracle(
    net: &DenseNetwork,
    rows: &[Vec<f64>],
    deltas: &[f64],
    factors: &[f64],
) -> Vec<f64> {
    let d = deltas.len();
    (0..d)
        .map(|i| {
            let mut total = 0.0;
            for x in rows {
                for &f in factors {
                    for dir in [1.0, -1.0] {
                        let mut xp = x.clone();
                        xp[i] = (x[i] + dir * f * deltas[i]).clamp(0.0, 1.0);
                        total += (naive_forward(net, x) - naive_forward(net, &xp)).abs();
                    }
                }
            }
            total / (rows.len() * factors.len() * 2) as f64
        })
        .collect()
}

/// Random network with sigmoid output and random non-zero biases.
pub fn random_net(d: usize, rng: &mut Rng) -> DenseNetwork {
    let depth = rng.random_range(1..=3);
    let mut sizes = vec![d];
    let mut acts = Vec::new();
    for _ in 1..depth {
        sizes.push(rng.random_range(1..=5));
        acts.push(if rng.random::<bool>() {
            Activation::Relu
        } else {
            Activation::Sigmoid
        });
    }
    sizes.push(1);
    acts.push(Activation::Sigmoid);
    let mut net = DenseNetwork::init(&sizes, &acts, &mut rng::seeded(rng.random())).unwrap();
    for layer in net.layers_mut() {
        layer.weights.mapv_inplace(|w| w * 3.0);
        layer.biases.mapv_inplace(|_| rng.random_range(-1.0..1.0));
    }
    net
}

/// Mann-Whitney pair count: P(score_pos > score_neg) + ½ P(tie).
pub fn pair_count_auc(scores: &[f64], truth: &[u8]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if truth[i] == 1 && truth[j] == 0 {
                pairs += 1.0;
                if si > sj {
                    wins += 1.0;
                } else if si == sj {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

/// Plug-in mutual information from joint probabilities.
pub fn mi_oracle(table: &[[usize; 2]]) -> f64 {
    let n: f64 = table.iter().flatten().sum::<usize>() as f64;
    let mut mi = 0.0;
    for (r, row) in table.iter().enumerate() {
        for c in 0..2 {
            let pxy = row[c] as f64 / n;
            if pxy == 0.0 {
                continue;
            }
            let px = (table[r][0] + table[r][1]) as f64 / n;
            let py = table.iter().map(|row| row[c]).sum::<usize>() as f64 / n;
            mi += pxy * (pxy.ln() - px.ln() - py.ln());
        }
    }
    mi
}

/// Pearson chi-square written as N · (Σ O² / (R·C) − 1) over non-empty rows.
pub fn chi2_oracle(table: &[[usize; 2]]) -> f64 {
    let rows: Vec<[usize; 2]> = table.iter().copied().filter(|r| r[0] + r[1] > 0).collect();
    let n: f64 = rows.iter().flatten().sum::<usize>() as f64;
    let cols = [0, 1].map(|c| rows.iter().map(|r| r[c]).sum::<usize>() as f64);
    let mut s = 0.0;
    for r in &rows {
        let rt = (r[0] + r[1]) as f64;
        for c in 0..2 {
            if cols[c] > 0.0 {
                s += (r[c] * r[c]) as f64 / (rt * cols[c]);
            }
        }
    }
    n * (s - 1.0)
}

/// One-way ANOVA via total and within sums of squares.
pub fn anova_oracle(a: &[f64], b: &[f64]) -> f64 {
    let all: Vec<f64> = a.iter().chain(b).copied().collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let sst: f64 = all.iter().map(|x| (x - mean(&all)).powi(2)).sum();
    let ssw: f64 = a.iter().map(|x| (x - mean(a)).powi(2)).sum::<f64>()
        + b.iter().map(|x| (x - mean(b)).powi(2)).sum::<f64>();
    let ssb = sst - ssw;
    (ssb / 1.0) / (ssw / (all.len() - 2) as f64)
}
