use std::fs;
use std::path::{Path, PathBuf};

use rulemine::data::{discretize_per_stock, load_dataset, read_binned, read_panel, write_binned};
use rulemine::Error;

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

const TARGET: &str = "Date,Stock,y\n2021-01-04,A,0.1\n2021-01-04,B,0.2\n2021-01-05,A,0.3\n2021-01-05,B,0.4\n";

#[test]
fn loads_and_sorts_by_stock_then_date() {
    let tmp = tempfile::tempdir().unwrap();
    let t = write(tmp.path(), "t.csv", TARGET);
    let f = write(
        tmp.path(),
        "f.csv",
        "Date,Stock,X[0],X[1]\n2021-01-05,B,4,40\n2021-01-04,A,1,10\n2021-01-05,A,3,30\n2021-01-04,B,2,20\n",
    );
    let ds = load_dataset(&t, &f).unwrap();
    assert_eq!(ds.n(), 4);
    assert_eq!(ds.feature_names(), ["X[0]", "X[1]"]);
    let order: Vec<_> = ds
        .index()
        .entries()
        .iter()
        .map(|e| (e.stock.as_str(), e.date.to_string()))
        .collect();
    assert_eq!(order[0], ("A", "2021-01-04".to_string()));
    assert_eq!(order[1], ("A", "2021-01-05".to_string()));
    assert_eq!(ds.y(), [0.1, 0.3, 0.2, 0.4]);
    assert_eq!(ds.feature(0), [1.0, 3.0, 2.0, 4.0]);
}

#[test]
fn duplicate_index_entry_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write(
        tmp.path(),
        "d.csv",
        "Date,Stock,y\n2021-01-04,A,1\n2021-01-04,A,2\n",
    );
    let err = read_panel(&p).unwrap_err();
    assert!(matches!(err, Error::DuplicateIndex { .. }), "{err}");
    assert!(err.to_string().contains("duplicate index"));
}

#[test]
fn index_mismatch_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let t = write(tmp.path(), "t.csv", TARGET);
    let f = write(
        tmp.path(),
        "f.csv",
        "Date,Stock,X[0]\n2021-01-04,A,1\n2021-01-04,B,2\n2021-01-05,A,3\n2021-01-05,C,4\n",
    );
    let err = load_dataset(&t, &f).unwrap_err();
    assert!(matches!(err, Error::IndexMismatch { .. }), "{err}");

    let short = write(tmp.path(), "s.csv", "Date,Stock,X[0]\n2021-01-04,A,1\n");
    assert!(matches!(
        load_dataset(&t, &short).unwrap_err(),
        Error::IndexMismatch { .. }
    ));
}

#[test]
fn non_numeric_and_missing_values_are_parse_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write(tmp.path(), "b.csv", "Date,Stock,y\n2021-01-04,A,abc\n");
    assert!(matches!(read_panel(&bad).unwrap_err(), Error::Parse { .. }));
    let empty = write(tmp.path(), "e.csv", "Date,Stock,y\n2021-01-04,A,\n");
    assert!(matches!(read_panel(&empty).unwrap_err(), Error::Parse { .. }));
    let date = write(tmp.path(), "dt.csv", "Date,Stock,y\n04/01/2021,A,1\n");
    assert!(matches!(read_panel(&date).unwrap_err(), Error::Parse { .. }));
}

#[test]
fn target_needs_one_value_column() {
    let tmp = tempfile::tempdir().unwrap();
    let t = write(tmp.path(), "t.csv", "Date,Stock,y,z\n2021-01-04,A,1,2\n");
    let f = write(tmp.path(), "f.csv", "Date,Stock,X[0]\n2021-01-04,A,1\n");
    assert!(load_dataset(&t, &f).is_err());
}

#[test]
fn missing_file_is_an_error() {
    assert!(read_panel(Path::new("/nonexistent/panel.csv")).is_err());
}

#[test]
fn binned_round_trip_and_range_check() {
    let tmp = tempfile::tempdir().unwrap();
    let t = write(tmp.path(), "t.csv", TARGET);
    let f = write(
        tmp.path(),
        "f.csv",
        "Date,Stock,X[0]\n2021-01-04,A,1\n2021-01-04,B,2\n2021-01-05,A,3\n2021-01-05,B,4\n",
    );
    let ds = load_dataset(&t, &f).unwrap();
    let dd = discretize_per_stock(&ds, 2).unwrap();
    // each stock has two values, one per bin
    assert_eq!(dd.bins(0), [0, 1, 0, 1]);
    let out = tmp.path().join("binned.csv");
    write_binned(&dd, &out).unwrap();
    assert_eq!(read_binned(&out, 2).unwrap(), dd);
    assert!(read_binned(&out, 1).is_err());
}
