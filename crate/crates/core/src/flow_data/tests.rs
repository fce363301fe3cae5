use std::io::Write;

use ndarray::{array, Array2};
use proptest::prelude::*;

use super::*;

fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(contents.as_bytes()).unwrap();
    f
}

fn dataset(rows: Vec<Vec<f64>>, labels: Vec<u8>) -> FlowDataset {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let features = Array2::from_shape_vec((n, d), flat).unwrap();
    let names = (0..d).map(|j| format!("c{j}")).collect();
    let raw = labels
        .iter()
        .map(|&l| {
            if l == 1 {
                "DrDoS_NTP".to_string()
            } else {
                BENIGN.to_string()
            }
        })
        .collect();
    FlowDataset::new(features, names, labels, raw).unwrap()
}

#[test]
fn load_simple_csv() {
    let f = write_tmp("A,B\n1,2\n3,4\n");
    let t = load_csv(f.path()).unwrap();
    assert_eq!(t.headers, vec!["A", "B"]);
    assert_eq!(t.rows, vec![vec!["1", "2"], vec!["3", "4"]]);
}

#[test]
fn load_trims_headers() {
    let f = write_tmp("A, Label \n1,BENIGN\n");
    let t = load_csv(f.path()).unwrap();
    assert_eq!(t.headers, vec!["A", "Label"]);
}

#[test]
fn load_rejects_ragged_row() {
    let f = write_tmp("A,B\n1,2\n3\n");
    match load_csv(f.path()) {
        Err(Error::RaggedRow {
            line,
            expected,
            found,
            ..
        }) => {
            assert_eq!((line, expected, found), (3, 2, 1));
        }
        other => panic!("expected ragged-row error, got {other:?}"),
    }
}

#[test]
fn load_missing_file_is_io_error() {
    assert!(matches!(
        load_csv("/nonexistent/x.csv"),
        Err(Error::Io { .. })
    ));
}

#[test]
fn duplicate_headers_get_suffix() {
    let f = write_tmp("Fwd Header Length, Fwd Header Length,Label\n1,2,BENIGN\n");
    let t = load_csv(f.path()).unwrap();
    assert_eq!(
        t.headers,
        vec!["Fwd Header Length", "Fwd Header Length.1", "Label"]
    );
}

fn raw(headers: &[&str], rows: &[&[&str]]) -> RawTable {
    RawTable::new(
        "mem",
        headers.iter().map(|s| s.to_string()).collect(),
        rows.iter()
            .map(|r| r.iter().map(|s| s.to_string()).collect())
            .collect(),
    )
    .unwrap()
}

#[test]
fn preprocess_zeroes_invalid_tokens() {
    let t = raw(
        &["Flow Bytes/s", "Flow Packets/s", "Label"],
        &[
            &["Infinity", "NaN", "DrDoS_NTP"],
            &["-Infinity", "inf", "BENIGN"],
            &["-inf", "", "DrDoS_DNS"],
            &["12.5", "3", "BENIGN"],
        ],
    );
    let ds = preprocess(&t, &default_drop_columns()).unwrap();
    assert_eq!(
        ds.features(),
        &array![[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [12.5, 3.0]]
    );
    assert_eq!(ds.labels(), &[1, 0, 1, 0]);
    assert!(!ds.is_normalized());
}

#[test]
fn preprocess_drops_identifier_columns_present() {
    let t = raw(
        &["Flow ID", "Source IP", "Source Port", "Timestamp", "Label"],
        &[&["x", "1.2.3.4", "80", "2018-12-01 10:00:00", "BENIGN"]],
    );
    let ds = preprocess(&t, &default_drop_columns()).unwrap();
    assert_eq!(ds.feature_names(), &["Source Port"]);
}

#[test]
fn preprocess_errors() {
    let t = raw(&["A", "B"], &[&["1", "2"]]);
    assert!(matches!(
        preprocess(&t, &[]),
        Err(Error::MissingLabel { ref source_name, .. }) if source_name == "mem"
    ));
    let t = raw(&["A", "Label"], &[&["1", "BENIGN"], &["abc", "BENIGN"]]);
    match preprocess(&t, &[]) {
        Err(Error::BadCell { column, row, .. }) => assert_eq!((column.as_str(), row), ("A", 2)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn preprocess_is_idempotent() {
    let t = raw(
        &["Flow ID", "A", "B", "Label"],
        &[
            &["f", "0.1", "Infinity", "DrDoS_NTP"],
            &["g", "7", "-2e-3", "BENIGN"],
        ],
    );
    let once = preprocess(&t, &default_drop_columns()).unwrap();
    let twice = preprocess(&once.to_raw(), &default_drop_columns()).unwrap();
    assert_eq!(once, twice);
}

#[test]
fn normalize_examples() {
    let ds = dataset(
        vec![vec![2.0, 5.0], vec![4.0, 5.0], vec![6.0, 5.0]],
        vec![0, 1, 1],
    );
    let n = normalize(&ds).unwrap();
    assert_eq!(n.features(), &array![[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]]);
    assert!(n.is_normalized());
    assert!(matches!(normalize(&n), Err(Error::AlreadyNormalized)));

    let train = dataset(vec![vec![0.0], vec![10.0]], vec![0, 1]);
    let scaler = normalize(&train).unwrap().scaler().unwrap().clone();
    let held_out = dataset(vec![vec![5.0], vec![20.0], vec![-1.0]], vec![0, 1, 1]);
    let scaled = apply_scaler(&held_out, &scaler).unwrap();
    assert_eq!(scaled.features(), &array![[0.5], [1.0], [0.0]]);
}

#[test]
fn filter_attack_examples() {
    let ds = dataset(
        vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
        vec![0, 1, 1, 0],
    );
    let f = filter_attacks(&ds).unwrap();
    assert_eq!(f.features(), &array![[1.0], [2.0]]);
    assert_eq!(f.labels(), &[1, 1]);

    let benign = dataset(vec![vec![0.0], vec![1.0]], vec![0, 0]);
    assert!(matches!(filter_attacks(&benign), Err(Error::NoAttackRows)));

    let attacks = dataset(vec![vec![0.0], vec![1.0]], vec![1, 1]);
    assert_eq!(filter_attacks(&attacks).unwrap(), attacks);
}

#[test]
fn cap_examples() {
    let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64]).collect();
    let mut labels = vec![1u8; 10];
    labels.extend([0, 0]);
    let ds = dataset(rows, labels);
    let capped = cap_per_class(&ds, 3, &GroupKey::Label, 9).unwrap();
    assert_eq!(capped.class_counts(), [2, 3]);

    let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
    let labels = (0..20).map(|i| u8::from(i % 2 == 0)).collect();
    let ds = dataset(rows, labels);
    assert_eq!(
        cap_per_class(&ds, 5, &GroupKey::Label, 1).unwrap().n_rows(),
        10
    );
    assert!(cap_per_class(&ds, 0, &GroupKey::Label, 1).is_err());
}

#[test]
fn cap_by_raw_label_and_column() {
    let ds = dataset(
        vec![vec![1.0], vec![1.0], vec![2.0], vec![3.0]],
        vec![1, 1, 1, 0],
    );
    let c = cap_per_class(&ds, 1, &GroupKey::Column("c0".into()), 4).unwrap();
    assert_eq!(c.n_rows(), 3);
    let c = cap_per_class(&ds, 1, &GroupKey::RawLabel, 4).unwrap();
    assert_eq!(c.n_rows(), 2);
}

#[test]
fn split_examples() {
    let rows: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64]).collect();
    let labels = (0..100).map(|i| u8::from(i < 50)).collect();
    let ds = dataset(rows, labels);
    let spec = SplitSpec {
        train_fraction: 0.8,
        stratified: true,
        seed: 3,
    };
    let (train, test) = split(&ds, &spec).unwrap();
    assert_eq!(train.class_counts(), [40, 40]);
    assert_eq!(test.class_counts(), [10, 10]);
    let (train2, test2) = split(&ds, &spec).unwrap();
    assert_eq!(train, train2);
    assert_eq!(test, test2);

    let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
    let ds = dataset(rows, vec![1; 10]);
    let spec = SplitSpec {
        train_fraction: 0.99,
        stratified: false,
        seed: 0,
    };
    let (train, test) = split(&ds, &spec).unwrap();
    assert_eq!((train.n_rows(), test.n_rows()), (9, 1));
}

#[test]
fn split_rejects_tiny_class() {
    let ds = dataset(vec![vec![0.0], vec![1.0], vec![2.0]], vec![0, 1, 1]);
    let spec = SplitSpec::default();
    assert!(matches!(
        split(&ds, &spec),
        Err(Error::ClassTooSmall { label: 0, count: 1 })
    ));
    let spec = SplitSpec {
        train_fraction: 1.0,
        ..SplitSpec::default()
    };
    assert!(split(&ds, &spec).is_err());
}

#[test]
fn synthetic_zero_noise_separates() {
    let spec = SyntheticSpec {
        n_attack: 30,
        n_benign: 20,
        d: 3,
        informative: vec![0],
        noise_scale: 0.0,
        seed: 5,
    };
    let ds = make_synthetic(&spec).unwrap();
    for (row, &label) in ds.features().outer_iter().zip(ds.labels()) {
        assert_eq!(row[0], if label == 1 { 1.0 } else { 0.0 });
    }
    assert_eq!(ds.class_counts(), [20, 30]);
}

#[test]
fn synthetic_is_deterministic() {
    let spec = SyntheticSpec {
        n_attack: 50,
        n_benign: 40,
        d: 6,
        seed: 11,
        ..Default::default()
    };
    assert_eq!(
        make_synthetic(&spec).unwrap(),
        make_synthetic(&spec).unwrap()
    );
    let other = SyntheticSpec {
        seed: 12,
        ..spec.clone()
    };
    assert_ne!(
        make_synthetic(&spec).unwrap(),
        make_synthetic(&other).unwrap()
    );
    let bad = SyntheticSpec {
        informative: vec![6],
        ..spec
    };
    assert!(make_synthetic(&bad).is_err());
}

#[test]
fn synthetic_mean_separation() {
    let spec = SyntheticSpec {
        n_attack: 2000,
        n_benign: 2000,
        d: 4,
        informative: vec![1],
        noise_scale: 1.0,
        seed: 2,
    };
    let ds = make_synthetic(&spec).unwrap();
    let mean = |class: u8, j: usize| {
        let v: Vec<f64> = ds
            .features()
            .outer_iter()
            .zip(ds.labels())
            .filter(|(_, &l)| l == class)
            .map(|(r, _)| r[j])
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    assert!(mean(1, 1) - mean(0, 1) >= 3.0 * spec.noise_scale);
    assert!((mean(1, 0) - mean(0, 0)).abs() < 0.2);
}

#[test]
fn dataset_round_trips_through_csv() {
    let spec = SyntheticSpec {
        n_attack: 20,
        n_benign: 20,
        d: 5,
        seed: 1,
        ..Default::default()
    };
    let ds = normalize(&make_synthetic(&spec).unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    write_dataset(&path, &ds).unwrap();
    let meta = DatasetMetadata::describe(&ds, default_drop_columns(), 1);
    write_metadata(dir.path().join("d.json"), &meta).unwrap();
    let meta = read_metadata(dir.path().join("d.json")).unwrap();
    let back = read_dataset(&path, Some(&meta)).unwrap();
    assert_eq!(back, ds);
}

fn arb_dataset() -> impl Strategy<Value = FlowDataset> {
    (2usize..30, 1usize..5).prop_flat_map(|(n, d)| {
        (
            proptest::collection::vec(-1e6f64..1e6, n * d),
            proptest::collection::vec(0u8..=1, n),
        )
            .prop_map(move |(cells, labels)| {
                let rows = cells.chunks(d).map(|c| c.to_vec()).collect();
                dataset(rows, labels)
            })
    })
}

proptest! {
    #[test]
    fn normalized_cells_in_unit_interval(ds in arb_dataset()) {
        let n = normalize(&ds).unwrap();
        prop_assert!(n.features().iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)));
    }

    #[test]
    fn renormalizing_is_identity(ds in arb_dataset()) {
        let n = normalize(&ds).unwrap();
        let refit = MinMaxScaler::fit(n.features(), n.feature_names());
        let again = refit.transform(n.features()).unwrap();
        for (a, b) in again.iter().zip(n.features().iter()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn split_is_partition(ds in arb_dataset(), seed in 0u64..1000, frac in 0.1f64..0.9) {
        let counts = ds.class_counts();
        prop_assume!(counts.iter().all(|&c| c == 0 || c >= 2));
        let (train, test) = split(&ds, &SplitSpec { train_fraction: frac, stratified: true, seed }).unwrap();
        prop_assert_eq!(train.n_rows() + test.n_rows(), ds.n_rows());
        // Each class: round(n_c * frac), clamped, so within one row of the exact share.
        for (c, &n) in counts.iter().enumerate() {
            if n > 0 {
                let expect = n as f64 * frac;
                prop_assert!((train.class_counts()[c] as f64 - expect).abs() <= 1.0);
            }
        }
        // Rows keep their values: the multiset of first-column values is preserved.
        let mut all: Vec<f64> = train.features().column(0).iter().chain(test.features().column(0).iter()).copied().collect();
        let mut orig: Vec<f64> = ds.features().column(0).to_vec();
        all.sort_by(f64::total_cmp);
        orig.sort_by(f64::total_cmp);
        prop_assert_eq!(all, orig);
    }

    #[test]
    fn cap_never_grows_or_alters(ds in arb_dataset(), cap in 1usize..10, seed in 0u64..100) {
        let capped = cap_per_class(&ds, cap, &GroupKey::Label, seed).unwrap();
        let before = ds.class_counts();
        let after = capped.class_counts();
        for c in 0..2 {
            prop_assert!(after[c] <= before[c]);
            prop_assert_eq!(after[c], before[c].min(cap));
        }
        for row in capped.features().outer_iter() {
            prop_assert!(ds.features().outer_iter().any(|r| r == row));
        }
    }
}
