use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use evrc_core::ingest::adapters::replay;
use evrc_core::ingest::snapshot::{SnapshotError, SnapshotRecord, SnapshotRows};
use evrc_core::ingest::{load_case, parse_file_set, read_file_set};
use evrc_core::model::EvidenceGrade;
use evrc_core::LoadError;

const CASES: [&str; 8] = [
    "aave", "bitcoin", "ethereum", "filecoin", "steem", "usdc", "xrp", "youtube",
];

fn case_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../cases")
        .join(name)
}

fn files(name: &str) -> BTreeMap<String, String> {
    read_file_set(&case_dir(name)).unwrap()
}

#[test]
fn every_fixture_loads_without_violations() {
    for c in CASES {
        let b = load_case(&case_dir(c)).unwrap_or_else(|e| panic!("{c}: {e}"));
        assert_eq!(b.case_id(), c);
    }
    let xrp = load_case(&case_dir("xrp")).unwrap();
    assert_eq!((xrp.flows.len(), xrp.routes.len()), (1, 0));
}

#[test]
fn empty_directory_lists_every_missing_file() {
    let dir = tempfile::tempdir().unwrap();
    match load_case(dir.path()) {
        Err(LoadError::MissingFiles(m)) => assert_eq!(m.len(), 5),
        other => panic!("{other:?}"),
    }
}

#[test]
fn future_schema_version_is_a_version_error() {
    let mut f = files("xrp");
    let case = f["case.json"].replace("\"schema_version\": 1", "\"schema_version\": 99");
    f.insert("case.json".into(), case);
    assert!(matches!(
        parse_file_set(&f),
        Err(LoadError::Version { found: 99, .. })
    ));
}

#[test]
fn malformed_json_reports_line_and_column() {
    let mut f = files("xrp");
    f.insert("flows.json".into(), "{\n  \"schema_version\": 1,\n  \"flows\": [,]\n}".into());
    match parse_file_set(&f) {
        Err(LoadError::Parse { file, line, column, .. }) => {
            assert_eq!(file, "flows.json");
            assert_eq!(line, 3);
            assert!(column > 0);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn halving_snapshot_replays_to_contiguous_rows() {
    let b = load_case(&case_dir("bitcoin")).unwrap();
    let rows = &b.rows.btc_blocks.as_ref().unwrap();
    assert_eq!(rows.rows.len(), 288);
    assert_eq!(rows.grade, EvidenceGrade::G2);
    assert!(rows
        .rows
        .windows(2)
        .all(|w| w[1].height == w[0].height + 1));
    assert_eq!(rows.rows[0].height, 839_856);
}

#[test]
fn aave_snapshot_rows_are_graded_g2() {
    let b = load_case(&case_dir("aave")).unwrap();
    let fees = b.rows.protocol_fees.as_ref().unwrap();
    assert_eq!(fees.rows.len(), 7);
    assert_eq!(fees.grade, EvidenceGrade::G2);
    assert!(!fees.coverage_gap);
}

fn bitcoin_snapshot() -> (String, String) {
    let path = "snapshots/mempool_blocks.json".to_string();
    let text = files("bitcoin")[&path].clone();
    (path, text)
}

#[test]
fn tampered_payload_is_an_integrity_error() {
    let (path, text) = bitcoin_snapshot();
    let tampered = text.replacen("totalFees\\\":", "totalFees\\\":1", 1);
    assert_ne!(tampered, text);
    let err = SnapshotRecord::from_json(&tampered, &path).unwrap_err();
    assert!(matches!(err, SnapshotError::Integrity { .. }), "{err}");
    assert!(err.is_integrity());
}

#[test]
fn edited_rows_do_not_survive_replay() {
    let (path, text) = bitcoin_snapshot();
    let mut record = SnapshotRecord::from_json(&text, &path).unwrap();
    if let SnapshotRows::BtcBlocks(rows) = &mut record.rows {
        rows[10].fees += rust_decimal::Decimal::ONE;
    }
    let err = replay(&record, &path).unwrap_err();
    assert!(matches!(err, SnapshotError::RowMismatch { .. }));
}

#[test]
fn snapshots_cannot_claim_g1() {
    let (path, text) = bitcoin_snapshot();
    let g1 = text.replace("\"grade\": \"G2\"", "\"grade\": \"G1\"");
    assert!(matches!(
        SnapshotRecord::from_json(&g1, &path),
        Err(SnapshotError::GradeG1 { .. })
    ));
}

#[test]
fn one_row_source_per_kind() {
    let mut f = files("bitcoin");
    f.insert(
        "rows/btc_blocks.csv".into(),
        "height,fees,subsidy\n1,0.1,3.125\n".into(),
    );
    assert!(matches!(parse_file_set(&f), Err(LoadError::Rows { .. })));
}

#[test]
fn snapshot_write_is_atomic_and_rereadable() {
    let (path, text) = bitcoin_snapshot();
    let record = SnapshotRecord::from_json(&text, &path).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nested/copy.json");
    record.write_atomic(&out).unwrap();
    assert_eq!(std::fs::read_to_string(&out).unwrap(), text);
    let entries: Vec<_> = std::fs::read_dir(out.parent().unwrap()).unwrap().collect();
    assert_eq!(entries.len(), 1);
}
