use ndarray::ArrayView1;

use super::{require_both_classes, BinningSpec, FeatureScoreTable};
use crate::flow_data::FlowDataset;
use crate::Result;

/// Equal-width bin index of every value over the column's observed range.
fn bin_column(col: &ArrayView1<f64>, bins: usize) -> Vec<usize> {
    let (lo, hi) = col
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if hi <= lo {
        return vec![0; col.len()];
    }
    let width = hi - lo;
    col.iter()
        .map(|&v| (((v - lo) / width * bins as f64).floor() as usize).min(bins - 1))
        .collect()
}

/// `bins × 2` contingency table of bin index against label.
pub fn contingency(col: &ArrayView1<f64>, labels: &[u8], bins: usize) -> Vec<[usize; 2]> {
    let mut table = vec![[0usize; 2]; bins];
    for (b, &y) in bin_column(col, bins).into_iter().zip(labels) {
        table[b][usize::from(y)] += 1;
    }
    table
}

/// Plug-in mutual information (nats) of a contingency table.
pub fn mutual_information_from_counts(table: &[[usize; 2]]) -> f64 {
    let n: usize = table.iter().map(|r| r[0] + r[1]).sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let col = [0, 1].map(|c| table.iter().map(|r| r[c]).sum::<usize>() as f64);
    let mut mi = 0.0;
    for row in table {
        let row_total = (row[0] + row[1]) as f64;
        for c in 0..2 {
            if row[c] == 0 {
                continue;
            }
            let joint = row[c] as f64;
            mi += joint / n * (joint * n / (row_total * col[c])).ln();
        }
    }
    mi.max(0.0)
}

/// Pearson chi-square statistic; empty rows and columns are dropped first.
pub fn chi_square_from_counts(table: &[[usize; 2]]) -> f64 {
    let rows: Vec<&[usize; 2]> = table.iter().filter(|r| r[0] + r[1] > 0).collect();
    let col = [0, 1].map(|c| rows.iter().map(|r| r[c]).sum::<usize>() as f64);
    let n = col[0] + col[1];
    if n == 0.0 {
        return 0.0;
    }
    let mut chi = 0.0;
    for row in rows {
        let row_total = (row[0] + row[1]) as f64;
        for c in 0..2 {
            if col[c] == 0.0 {
                continue;
            }
            let expected = row_total * col[c] / n;
            let diff = row[c] as f64 - expected;
            chi += diff * diff / expected;
        }
    }
    chi
}

fn per_feature(ds: &FlowDataset, score: impl Fn(&ArrayView1<f64>) -> f64) -> Vec<f64> {
    ds.features()
        .columns()
        .into_iter()
        .map(|c| score(&c))
        .collect()
}

pub fn mutual_information(ds: &FlowDataset, binning: &BinningSpec) -> Result<FeatureScoreTable> {
    binning.validate()?;
    require_both_classes(ds)?;
    let scores = per_feature(ds, |c| {
        mutual_information_from_counts(&contingency(c, ds.labels(), binning.bins))
    });
    Ok(FeatureScoreTable::new(
        "mi",
        ds.feature_names().to_vec(),
        scores,
    ))
}

pub fn chi_square(ds: &FlowDataset, binning: &BinningSpec) -> Result<FeatureScoreTable> {
    binning.validate()?;
    require_both_classes(ds)?;
    let scores = per_feature(ds, |c| {
        chi_square_from_counts(&contingency(c, ds.labels(), binning.bins))
    });
    Ok(FeatureScoreTable::new(
        "chi2",
        ds.feature_names().to_vec(),
        scores,
    ))
}

/// One-way ANOVA F over two groups. Zero within-group variance yields `+inf`
/// when the means differ and 0 when they do not.
pub fn anova_f_groups(a: &[f64], b: &[f64]) -> f64 {
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (ma, mb) = (mean(a), mean(b));
    let n = (a.len() + b.len()) as f64;
    let grand = (ma * a.len() as f64 + mb * b.len() as f64) / n;
    let between = a.len() as f64 * (ma - grand).powi(2) + b.len() as f64 * (mb - grand).powi(2);
    let within = a.iter().map(|v| (v - ma).powi(2)).sum::<f64>()
        + b.iter().map(|v| (v - mb).powi(2)).sum::<f64>();
    if between == 0.0 {
        return 0.0;
    }
    if within == 0.0 || n <= 2.0 {
        return f64::INFINITY;
    }
    between / (within / (n - 2.0))
}

pub fn anova_f(ds: &FlowDataset) -> Result<FeatureScoreTable> {
    require_both_classes(ds)?;
    let scores = per_feature(ds, |c| {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for (&v, &y) in c.iter().zip(ds.labels()) {
            if y == 0 {
                a.push(v);
            } else {
                b.push(v);
            }
        }
        anova_f_groups(&a, &b)
    });
    Ok(FeatureScoreTable::new(
        "anova",
        ds.feature_names().to_vec(),
        scores,
    ))
}

#[cfg(test)]
mod tests {
    use ndarray::{array, Array2};

    use super::*;
    use crate::Error;

    fn ds(cols: Vec<Vec<f64>>, labels: Vec<u8>) -> FlowDataset {
        let n = labels.len();
        let d = cols.len();
        let x = Array2::from_shape_fn((n, d), |(i, j)| cols[j][i]);
        let names = (0..d).map(|j| format!("f{j}")).collect();
        let raw = labels.iter().map(|l| l.to_string()).collect();
        FlowDataset::new(x, names, labels, raw).unwrap()
    }

    #[test]
    fn mi_of_label_copy_is_ln2() {
        let labels = vec![0, 1, 0, 1, 1, 0];
        let d = ds(vec![labels.iter().map(|&l| f64::from(l)).collect()], labels);
        let t = mutual_information(&d, &BinningSpec::default()).unwrap();
        assert!((t.scores[0] - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn mi_hand_table() {
        let mi = mutual_information_from_counts(&[[30, 10], [10, 30]]);
        // p(x,y) = 3/8 on the diagonal, 1/8 off it; marginals 1/2.
        let expected = 2.0 * 0.375 * (0.375f64 / 0.25).ln() + 2.0 * 0.125 * (0.125f64 / 0.25).ln();
        assert!((mi - expected).abs() < 1e-12);
    }

    #[test]
    fn chi_square_examples() {
        assert_eq!(chi_square_from_counts(&[[10, 10], [10, 10]]), 0.0);
        assert_eq!(chi_square_from_counts(&[[20, 0], [0, 20]]), 40.0);
        let a = chi_square_from_counts(&[[12, 5], [3, 9], [0, 0]]);
        let b = chi_square_from_counts(&[[24, 10], [6, 18]]);
        assert!((b - 2.0 * a).abs() < 1e-12);
    }

    #[test]
    fn anova_examples() {
        assert_eq!(anova_f_groups(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), 0.0);
        assert_eq!(anova_f_groups(&[0.0, 0.0], &[1.0, 1.0]), f64::INFINITY);
        // means 2 and 3; SSB = 1.5, SSW = 4, df = 4 -> F = 1.5
        assert!((anova_f_groups(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]) - 1.5).abs() < 1e-12);
        let d = ds(
            vec![vec![0.0, 0.0, 1.0, 1.0], vec![0.3, 0.1, 0.2, 0.4]],
            vec![0, 0, 1, 1],
        );
        let t = anova_f(&d).unwrap();
        assert_eq!(t.ranking[0], 0);
    }

    #[test]
    fn single_class_rejected() {
        let d = ds(vec![vec![0.1, 0.2]], vec![1, 1]);
        assert!(matches!(
            mutual_information(&d, &BinningSpec::default()),
            Err(Error::SingleClass)
        ));
        assert!(matches!(
            chi_square(&d, &BinningSpec::default()),
            Err(Error::SingleClass)
        ));
        assert!(matches!(anova_f(&d), Err(Error::SingleClass)));
        let bad = BinningSpec {
            bins: 1,
            ..Default::default()
        };
        assert!(mutual_information(&d, &bad).is_err());
    }

    #[test]
    fn binning_edges() {
        let col = array![0.0, 0.05, 0.1, 0.95, 1.0];
        assert_eq!(bin_column(&col.view(), 10), vec![0, 0, 1, 9, 9]);
        let flat = array![3.0, 3.0];
        assert_eq!(bin_column(&flat.view(), 10), vec![0, 0]);
    }
}
