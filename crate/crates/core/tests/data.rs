use std::io::Write;

use proptest::prelude::*;
use zoprox::data::{
    parse_libsvm, read_libsvm_path, split, write_libsvm, Dataset, LabelMapping, Row,
};
use zoprox::ZoError;

fn parse(text: &str) -> zoprox::Result<Dataset> {
    parse_libsvm(text.as_bytes())
}

#[test]
fn single_lines() {
    let ds = parse("+1 1:0.5 3:-2\n").unwrap();
    assert_eq!(ds.rows[0].features, vec![(1, 0.5), (3, -2.0)]);
    assert!(ds.d >= 3);
    let ds = parse("-1\n").unwrap();
    assert_eq!(ds.rows[0].label, -1.0);
    assert!(ds.rows[0].features.is_empty());
}

#[test]
fn zero_one_labels_are_mapped() {
    let ds = parse("0 1:1\n1 2:1\n0 3:1\n").unwrap();
    assert_eq!(ds.label_mapping, LabelMapping::ZeroOne);
    let labels: Vec<f64> = ds.rows.iter().map(|r| r.label).collect();
    assert_eq!(labels, vec![-1.0, 1.0, -1.0]);
}

#[test]
fn malformed_tokens_report_position() {
    match parse("+1 1:0.5\n-1 2:1 3x4\n") {
        Err(ZoError::Parse {
            line: 2, column: 8, ..
        }) => {}
        other => panic!("{other:?}"),
    }
    match parse("abc 1:1\n") {
        Err(ZoError::Parse {
            line: 1, column: 1, ..
        }) => {}
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse("+1 0:1\n"), Err(ZoError::Parse { .. })));
    assert!(matches!(parse("+1 1:nan\n"), Err(ZoError::Parse { .. })));
}

#[test]
fn non_increasing_indices_are_rejected() {
    assert!(matches!(
        parse("+1 3:1 2:1\n"),
        Err(ZoError::Parse {
            line: 1,
            column: 8,
            ..
        })
    ));
    assert!(matches!(parse("+1 2:1 2:1\n"), Err(ZoError::Parse { .. })));
}

#[test]
fn three_labels_are_rejected() {
    assert!(matches!(
        parse("1 1:1\n2 1:1\n3 1:1\n"),
        Err(ZoError::Label(_))
    ));
}

#[test]
fn reads_files_from_disk() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(b"+1 2:1\n-1 1:1\n").unwrap();
    let ds = read_libsvm_path(f.path()).unwrap();
    assert_eq!((ds.n(), ds.d), (2, 2));
    assert!(read_libsvm_path("/definitely/not/here").is_err());
}

fn numbered(n: usize) -> Dataset {
    Dataset {
        rows: (0..n)
            .map(|i| Row {
                label: if i % 3 == 0 { 1.0 } else { -1.0 },
                features: vec![(1, i as f64)],
            })
            .collect(),
        d: 1,
        label_mapping: LabelMapping::Identity,
    }
}

#[test]
fn split_partitions_and_rounds_half_up() {
    for (n, train_n) in [(100, 50), (101, 51), (3, 2)] {
        let ds = numbered(n);
        let (a, b) = split(&ds, 0.5, 4).unwrap();
        assert_eq!((a.n(), b.n()), (train_n, n - train_n));
        let mut ids: Vec<f64> = a
            .rows
            .iter()
            .chain(&b.rows)
            .map(|r| r.features[0].1)
            .collect();
        ids.sort_by(f64::total_cmp);
        assert_eq!(ids, (0..n).map(|i| i as f64).collect::<Vec<_>>());
        assert_eq!((a.d, b.d), (1, 1));
        assert_eq!(split(&ds, 0.5, 4).unwrap(), (a, b));
    }
    assert!(matches!(
        split(&numbered(1), 0.5, 0),
        Err(ZoError::Split(_))
    ));
    assert!(matches!(
        split(&numbered(10), 1.0, 0),
        Err(ZoError::Split(_))
    ));
}

#[test]
fn stats_count_labels_and_density() {
    let ds = parse("+1 1:3 2:4\n-1 4:1\n").unwrap();
    let s = ds.stats();
    assert_eq!((s.n, s.d, s.nnz, s.positives, s.negatives), (2, 4, 3, 1, 1));
    assert!((s.density - 3.0 / 8.0).abs() < 1e-15);
    assert_eq!(s.max_row_norm_sq, 25.0);
}

fn dataset_strategy() -> impl Strategy<Value = Dataset> {
    let row = (
        prop::bool::ANY,
        prop::collection::btree_map(1u32..60, -1e6f64..1e6, 0..8),
    )
        .prop_map(|(pos, feats)| Row {
            label: if pos { 1.0 } else { -1.0 },
            features: feats.into_iter().collect(),
        });
    prop::collection::vec(row, 1..30).prop_map(|rows| {
        let d = rows
            .iter()
            .flat_map(|r| r.features.last())
            .map(|&(j, _)| j as usize)
            .max()
            .unwrap_or(0);
        Dataset {
            rows,
            d,
            label_mapping: LabelMapping::Identity,
        }
    })
}

proptest! {
    #[test]
    fn write_then_parse_is_identity(ds in dataset_strategy()) {
        let mut buf = Vec::new();
        write_libsvm(&ds, &mut buf).unwrap();
        prop_assert_eq!(parse_libsvm(&buf[..]).unwrap(), ds);
    }

    #[test]
    fn split_is_a_partition(n in 2usize..200, frac in 0.05f64..0.95, seed in any::<u64>()) {
        let ds = numbered(n);
        let train_n = (frac * n as f64 + 0.5).floor() as usize;
        prop_assume!(train_n > 0 && train_n < n);
        let (a, b) = split(&ds, frac, seed).unwrap();
        prop_assert_eq!(a.n(), train_n);
        let mut ids: Vec<f64> = a.rows.iter().chain(&b.rows).map(|r| r.features[0].1).collect();
        ids.sort_by(f64::total_cmp);
        prop_assert_eq!(ids, (0..n).map(|i| i as f64).collect::<Vec<_>>());
    }
}
