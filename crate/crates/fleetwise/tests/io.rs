use std::fs;

use fleetwise::error::ErrorKind;
use fleetwise::io::{read_dataset, read_load_series, write_dataset, write_load_series};
use fleetwise_core::data::schema::SCADA_COLUMNS;
use fleetwise_core::data::Dataset;
use fleetwise_core::fatigue::LoadSeries;
use proptest::prelude::*;

fn header(extra: &[&str]) -> String {
    let mut h = vec!["timestamp"];
    h.extend(SCADA_COLUMNS);
    h.extend(extra);
    h.join(",")
}

fn row(ts: i64, values: &[&str]) -> String {
    let mut r = vec![ts.to_string()];
    r.extend(values.iter().map(|s| s.to_string()));
    r.join(",")
}

#[test]
fn gap_rows_are_dropped_and_counted() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t07.csv");
    let full = ["1", "2", "3", "4", "5", "6", "7", "8.5"];
    let gap = ["1", "2", "", "4", "5", "6", "7", "8.5"];
    let text = [
        header(&["DEM_tn"]),
        row(0, &full),
        row(600, &gap),
        row(1200, &full),
        row(1800, &["1", "2", "3", "4", "5", "6", "7", "NaN"]).replace("NaN", "nan"),
        row(2400, &full),
    ]
    .join("\n");
    fs::write(&path, text).unwrap();
    let loaded = read_dataset(&path).unwrap();
    assert_eq!(loaded.dataset.len(), 3);
    assert_eq!(loaded.dropped, 2);
    assert_eq!(loaded.dataset.timestamps(), &[0, 1200, 2400]);
    assert_eq!(loaded.dataset.turbine_id(), "t07");
    assert_eq!(loaded.dataset.column("DEM_tn").unwrap(), &[8.5, 8.5, 8.5]);
}

#[test]
fn header_only_file_is_an_empty_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    fs::write(&path, header(&[]) + "\n").unwrap();
    let loaded = read_dataset(&path).unwrap();
    assert!(loaded.dataset.is_empty());
    assert_eq!(loaded.dropped, 0);
}

#[test]
fn malformed_files_are_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("nots.csv", SCADA_COLUMNS.join(",") + "\n"),
        ("noscada.csv", "timestamp,Hs\n0,1\n".to_string()),
        ("unknown.csv", header(&["bogus"]) + "\n"),
        ("dup.csv", header(&["Hs", "Hs"]) + "\n"),
        ("badcell.csv", header(&[]) + "\n" + &row(0, &["1", "2", "x", "4", "5", "6", "7"])),
        ("badts.csv", header(&[]) + "\n" + &row(0, &["1"; 7]).replacen('0', "t", 1)),
    ];
    for (name, text) in cases {
        let path = dir.path().join(name);
        fs::write(&path, text).unwrap();
        let err = read_dataset(&path).unwrap_err();
        assert_eq!(err.kind(), ErrorKind::Validation, "{name}: {err}");
    }
}

#[test]
fn missing_file_names_the_artifact() {
    let err = read_dataset(std::path::Path::new("/definitely/not/here.csv")).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert_eq!(err.to_json()["artifact"], "/definitely/not/here.csv");
}

#[test]
fn load_series_round_trip_and_spacing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let s = LoadSeries::new(vec![0.1, -2.5, 3.75, 1e-9], 0.5).unwrap();
    write_load_series(&path, &s).unwrap();
    assert_eq!(read_load_series(&path).unwrap(), s);

    let uneven = dir.path().join("u.csv");
    fs::write(&uneven, "t_s,moment_MNm\n0,1\n0.5,2\n1.5,3\n").unwrap();
    assert!(read_load_series(&uneven).is_err());
}

proptest! {
    #[test]
    fn dataset_round_trip_is_exact(
        rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 8), 0..20),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let mut names: Vec<String> = SCADA_COLUMNS.iter().map(|s| s.to_string()).collect();
        names.push("DEM_tl".into());
        let columns: Vec<Vec<f64>> = (0..8).map(|c| rows.iter().map(|r| r[c]).collect()).collect();
        let stamps: Vec<i64> = (0..rows.len() as i64).map(|k| 1_600_000_000 + 600 * k).collect();
        let ds = Dataset::new("rt", stamps, names, columns).unwrap();
        let path = dir.path().join("rt.csv");
        write_dataset(&path, &ds).unwrap();
        let back = read_dataset(&path).unwrap();
        prop_assert_eq!(back.dropped, 0);
        prop_assert_eq!(back.dataset, ds);
    }
}
