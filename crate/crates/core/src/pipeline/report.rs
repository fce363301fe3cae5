use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::metrics::MetricRow;
use crate::numfmt;
use crate::{Error, Result};

/// Metrics that get a series file per (selector, classifier).
pub const REPORT_METRICS: [&str; 5] = ["accuracy", "precision", "recall", "f1", "auc"];

fn metric(row: &MetricRow, name: &str) -> f64 {
    match name {
        "accuracy" => row.accuracy,
        "precision" => row.precision,
        "recall" => row.recall,
        "f1" => row.f1,
        "auc" => row.auc,
        _ => unreachable!("unknown metric {name}"),
    }
}

/// Rows grouped by (selector, classifier) in order of first appearance, each
/// group sorted by k.
pub fn series(rows: &[MetricRow]) -> Vec<((String, String), Vec<&MetricRow>)> {
    let mut groups: Vec<((String, String), Vec<&MetricRow>)> = Vec::new();
    for row in rows {
        let key = (row.selector.clone(), row.classifier.clone());
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(row),
            None => groups.push((key, vec![row])),
        }
    }
    for (_, members) in &mut groups {
        members.sort_by_key(|r| r.k);
    }
    groups
}

/// Highest-F1 row; ties go to the smaller k, then to the earlier row.
pub fn best_by_f1<'a>(rows: impl IntoIterator<Item = &'a MetricRow>) -> Option<&'a MetricRow> {
    rows.into_iter()
        .fold(None, |best: Option<&MetricRow>, r| match best {
            Some(b) if b.f1 > r.f1 || (b.f1 == r.f1 && b.k <= r.k) => Some(b),
            _ => Some(r),
        })
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `series/<metric>/<selector>_<classifier>.csv` files and
/// `summary.md` under `dir`. Output depends only on `rows`.
pub fn write_report(rows: &[MetricRow], dir: &Path) -> Result<Vec<PathBuf>> {
    if rows.is_empty() {
        return Err(Error::Format {
            path: dir.to_path_buf(),
            message: "metric table has no rows".into(),
        });
    }
    let groups = series(rows);
    let mut files = Vec::new();
    for name in REPORT_METRICS {
        for ((selector, classifier), members) in &groups {
            let mut text = format!("k,{name}\n");
            for r in members {
                writeln!(text, "{},{}", r.k, numfmt::exact(metric(r, name))).unwrap();
            }
            let path = dir
                .join("series")
                .join(name)
                .join(format!("{selector}_{classifier}.csv"));
            write(&path, &text)?;
            files.push(path);
        }
    }
    let path = dir.join("summary.md");
    write(&path, &summary(rows, &groups))?;
    files.push(path);
    Ok(files)
}

fn summary(rows: &[MetricRow], groups: &[((String, String), Vec<&MetricRow>)]) -> String {
    let g = |x: f64| numfmt::sig(x, 6);
    let mut ks: Vec<usize> = rows.iter().map(|r| r.k).collect();
    ks.sort_unstable();
    ks.dedup();
    let best = best_by_f1(rows).expect("non-empty");

    let mut s = String::from("# Feature selection report\n\n");
    writeln!(
        s,
        "{} evaluations over {} selector/classifier pairs, k in {{{}}}.\n",
        rows.len(),
        groups.len(),
        ks.iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(", ")
    )
    .unwrap();
    writeln!(
        s,
        "Best F1: selector `{}`, classifier `{}`, k = {} (F1 {}, accuracy {}, AUC {}).\n",
        best.selector,
        best.classifier,
        best.k,
        g(best.f1),
        g(best.accuracy),
        g(best.auc)
    )
    .unwrap();
    s.push_str("## Best k per selector and classifier\n\n");
    s.push_str("| selector | classifier | best k | F1 | accuracy | precision | recall | AUC |\n");
    s.push_str("|---|---|---|---|---|---|---|---|\n");
    for ((selector, classifier), members) in groups {
        let b = best_by_f1(members.iter().copied()).expect("non-empty group");
        writeln!(
            s,
            "| {selector} | {classifier} | {} | {} | {} | {} | {} | {} |",
            b.k,
            g(b.f1),
            g(b.accuracy),
            g(b.precision),
            g(b.recall),
            g(b.auc)
        )
        .unwrap();
    }
    s.push_str("\n## Peak value per metric\n\n");
    s.push_str("| selector | classifier |");
    for m in REPORT_METRICS {
        write!(s, " {m} |").unwrap();
    }
    s.push_str("\n|---|---|");
    s.push_str(&"---|".repeat(REPORT_METRICS.len()));
    s.push('\n');
    for ((selector, classifier), members) in groups {
        write!(s, "| {selector} | {classifier} |").unwrap();
        for m in REPORT_METRICS {
            let (k, v) = members.iter().map(|r| (r.k, metric(r, m))).fold(
                (0, f64::NEG_INFINITY),
                |acc, (k, v)| if v > acc.1 { (k, v) } else { acc },
            );
            write!(s, " {} (k={k}) |", g(v)).unwrap();
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(selector: &str, classifier: &str, k: usize, f1: f64) -> MetricRow {
        MetricRow {
            selector: selector.into(),
            classifier: classifier.into(),
            k,
            accuracy: f1,
            precision: f1,
            recall: f1,
            f1,
            auc: f1,
            train_seconds: 0.0,
        }
    }

    fn table() -> Vec<MetricRow> {
        let mut rows = Vec::new();
        for sel in ["ganfs", "mi", "chi2", "anova"] {
            for k in [5, 10, 20, 40, 81] {
                for clf in ["logreg", "forest"] {
                    let bump = if sel == "mi" && clf == "forest" && k == 20 {
                        0.2
                    } else {
                        0.0
                    };
                    rows.push(row(sel, clf, k, 0.5 + k as f64 / 1000.0 + bump));
                }
            }
        }
        rows
    }

    #[test]
    fn eight_series_per_metric() {
        let dir = tempfile::tempdir().unwrap();
        let files = write_report(&table(), dir.path()).unwrap();
        assert_eq!(files.len(), REPORT_METRICS.len() * 8 + 1);
        for m in REPORT_METRICS {
            assert_eq!(
                std::fs::read_dir(dir.path().join("series").join(m))
                    .unwrap()
                    .count(),
                8
            );
        }
        let s = std::fs::read_to_string(dir.path().join("series/f1/mi_forest.csv")).unwrap();
        assert_eq!(s.lines().count(), 6);
        assert!(s.starts_with("k,f1\n5,"));
    }

    #[test]
    fn summary_names_argmax_triple() {
        let dir = tempfile::tempdir().unwrap();
        write_report(&table(), dir.path()).unwrap();
        let s = std::fs::read_to_string(dir.path().join("summary.md")).unwrap();
        assert!(
            s.contains("Best F1: selector `mi`, classifier `forest`, k = 20"),
            "{s}"
        );
    }

    #[test]
    fn regenerates_identically() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let fa = write_report(&table(), a.path()).unwrap();
        write_report(&table(), b.path()).unwrap();
        for f in fa {
            let rel = f.strip_prefix(a.path()).unwrap();
            assert_eq!(
                std::fs::read(&f).unwrap(),
                std::fs::read(b.path().join(rel)).unwrap()
            );
        }
    }

    #[test]
    fn ties_prefer_smaller_k() {
        let rows = [
            row("a", "x", 10, 0.9),
            row("a", "x", 5, 0.9),
            row("a", "x", 20, 0.8),
        ];
        assert_eq!(best_by_f1(&rows).unwrap().k, 5);
        assert!(write_report(&[], Path::new("/nonexistent")).is_err());
    }
}
