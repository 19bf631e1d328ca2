use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::adapters;
use super::rows;
use super::snapshot::{sha256_hex, SnapshotRecord, SnapshotRows};
use crate::error::LoadError;
use crate::model::{
    CaseBundle, CaseHeader, CaseRows, EvidenceGrade, EvidenceSource, FileDigest, RewardDenominator,
    Route, RowSet, ValueFlow,
};
use crate::validate::validate_bundle;
use crate::INPUT_SCHEMA_VERSION;

pub const REQUIRED_FILES: [&str; 5] = [
    "case.json",
    "flows.json",
    "routes.json",
    "sources.json",
    "denominators.json",
];

const BTC_CSV: &str = "rows/btc_blocks.csv";
const ETH_CSV: &str = "rows/eth_rewards.csv";
const FEES_CSV: &str = "rows/protocol_fees.csv";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlowsFile {
    schema_version: u32,
    flows: Vec<ValueFlow>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoutesFile {
    schema_version: u32,
    routes: Vec<Route>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SourcesFile {
    schema_version: u32,
    sources: Vec<EvidenceSource>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DenominatorsFile {
    schema_version: u32,
    denominators: Vec<RewardDenominator>,
}

/// Checks `schema_version` before the strict parse, so a future file fails
/// with a version error rather than an unknown-field error.
fn parse_versioned<T: DeserializeOwned>(file: &str, text: &str) -> Result<T, LoadError> {
    #[derive(Deserialize)]
    struct Probe {
        schema_version: Option<u64>,
    }
    let probe: Probe = serde_json::from_str(text).map_err(|e| LoadError::parse(file, &e))?;
    if let Some(found) = probe.schema_version {
        if found != u64::from(INPUT_SCHEMA_VERSION) {
            return Err(LoadError::Version {
                file: file.to_string(),
                found,
                supported: INPUT_SCHEMA_VERSION,
            });
        }
    }
    serde_json::from_str(text).map_err(|e| LoadError::parse(file, &e))
}

fn csv_rows<T>(rows: Vec<T>, origin: &str) -> RowSet<T> {
    RowSet {
        rows,
        origin: origin.to_string(),
        grade: EvidenceGrade::G2,
        fields_and_dates_specified: true,
        coverage_gap: false,
    }
}

fn snapshot_rows<T>(rows: Vec<T>, origin: &str, record: &SnapshotRecord) -> RowSet<T> {
    RowSet {
        rows,
        origin: origin.to_string(),
        grade: record.grade,
        fields_and_dates_specified: true,
        coverage_gap: record.coverage_gap,
    }
}

fn set_once<T>(slot: &mut Option<RowSet<T>>, set: RowSet<T>) -> Result<(), LoadError> {
    if let Some(prev) = slot {
        return Err(LoadError::Rows {
            file: set.origin,
            message: format!("rows of this kind were already supplied by {}", prev.origin),
        });
    }
    *slot = Some(set);
    Ok(())
}

/// Builds a bundle from in-memory files keyed by case-relative path. Does
/// not validate.
pub fn parse_file_set(files: &BTreeMap<String, String>) -> Result<CaseBundle, LoadError> {
    let missing: Vec<String> = REQUIRED_FILES
        .iter()
        .filter(|f| !files.contains_key(**f))
        .map(|f| f.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(LoadError::MissingFiles(missing));
    }

    let header: CaseHeader = parse_versioned("case.json", &files["case.json"])?;
    let flows: FlowsFile = parse_versioned("flows.json", &files["flows.json"])?;
    let routes: RoutesFile = parse_versioned("routes.json", &files["routes.json"])?;
    let sources: SourcesFile = parse_versioned("sources.json", &files["sources.json"])?;
    let denominators: DenominatorsFile =
        parse_versioned("denominators.json", &files["denominators.json"])?;

    let mut case_rows = CaseRows::default();
    for (path, text) in files {
        if REQUIRED_FILES.contains(&path.as_str()) {
            continue;
        }
        match path.as_str() {
            BTC_CSV => set_once(
                &mut case_rows.btc_blocks,
                csv_rows(rows::parse_btc_blocks(text, path)?, path),
            )?,
            ETH_CSV => set_once(
                &mut case_rows.eth_rewards,
                csv_rows(rows::parse_eth_rewards(text, path)?, path),
            )?,
            FEES_CSV => set_once(
                &mut case_rows.protocol_fees,
                csv_rows(rows::parse_protocol_fees(text, path)?, path),
            )?,
            p if p.starts_with("snapshots/") && p.ends_with(".json") => {
                let record = SnapshotRecord::from_json(text, p)?;
                match adapters::replay(&record, p)? {
                    SnapshotRows::BtcBlocks(r) => {
                        set_once(&mut case_rows.btc_blocks, snapshot_rows(r, p, &record))?
                    }
                    SnapshotRows::ProtocolFees(r) => {
                        set_once(&mut case_rows.protocol_fees, snapshot_rows(r, p, &record))?
                    }
                }
            }
            other => {
                return Err(LoadError::Rows {
                    file: other.to_string(),
                    message: "unrecognised case file".into(),
                })
            }
        }
    }

    let provenance = files
        .iter()
        .map(|(path, text)| FileDigest {
            path: path.clone(),
            sha256: sha256_hex(text.as_bytes()),
        })
        .collect();

    Ok(CaseBundle {
        header,
        flows: flows.flows,
        routes: routes.routes,
        sources: sources.sources,
        denominators: denominators.denominators,
        rows: case_rows,
        provenance,
    })
}

fn read_text(path: &Path) -> Result<String, LoadError> {
    std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn list_dir(dir: &Path, sub: &str, ext: &str, out: &mut BTreeMap<String, String>) -> Result<(), LoadError> {
    let d = dir.join(sub);
    if !d.is_dir() {
        return Ok(());
    }
    let entries = std::fs::read_dir(&d).map_err(|source| LoadError::Io {
        path: d.clone(),
        source,
    })?;
    for entry in entries {
        let entry = entry.map_err(|source| LoadError::Io {
            path: d.clone(),
            source,
        })?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if entry.path().is_file() && name.ends_with(ext) {
            out.insert(format!("{sub}/{name}"), read_text(&entry.path())?);
        }
    }
    Ok(())
}

/// Reads the case files under `dir`. Files other than the required JSON
/// files, `rows/*.csv` and `snapshots/*.json` are ignored.
pub fn read_file_set(dir: &Path) -> Result<BTreeMap<String, String>, LoadError> {
    if !dir.is_dir() {
        return Err(LoadError::Io {
            path: dir.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
        });
    }
    let mut files = BTreeMap::new();
    for f in REQUIRED_FILES {
        let p = dir.join(f);
        if p.is_file() {
            files.insert(f.to_string(), read_text(&p)?);
        }
    }
    list_dir(dir, "rows", ".csv", &mut files)?;
    list_dir(dir, "snapshots", ".json", &mut files)?;
    Ok(files)
}

/// Reads, parses and validates a case directory.
pub fn load_case(dir: &Path) -> Result<CaseBundle, LoadError> {
    let bundle = parse_file_set(&read_file_set(dir)?)?;
    let violations = validate_bundle(&bundle);
    if violations.is_empty() {
        Ok(bundle)
    } else {
        Err(LoadError::Invalid(violations))
    }
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("case records serialize");
    s.push('\n');
    s
}

/// Canonical serialization. Row sets are always written as CSV, so a bundle
/// loaded from a snapshot comes back with CSV rows of identical content.
pub fn to_file_set(bundle: &CaseBundle) -> BTreeMap<String, String> {
    let v = INPUT_SCHEMA_VERSION;
    let mut m = BTreeMap::new();
    m.insert("case.json".to_string(), pretty(&bundle.header));
    m.insert(
        "flows.json".to_string(),
        pretty(&FlowsFile {
            schema_version: v,
            flows: bundle.flows.clone(),
        }),
    );
    m.insert(
        "routes.json".to_string(),
        pretty(&RoutesFile {
            schema_version: v,
            routes: bundle.routes.clone(),
        }),
    );
    m.insert(
        "sources.json".to_string(),
        pretty(&SourcesFile {
            schema_version: v,
            sources: bundle.sources.clone(),
        }),
    );
    m.insert(
        "denominators.json".to_string(),
        pretty(&DenominatorsFile {
            schema_version: v,
            denominators: bundle.denominators.clone(),
        }),
    );
    if let Some(r) = &bundle.rows.btc_blocks {
        m.insert(BTC_CSV.to_string(), rows::write_btc_blocks(&r.rows));
    }
    if let Some(r) = &bundle.rows.eth_rewards {
        m.insert(ETH_CSV.to_string(), rows::write_eth_rewards(&r.rows));
    }
    if let Some(r) = &bundle.rows.protocol_fees {
        m.insert(FEES_CSV.to_string(), rows::write_protocol_fees(&r.rows));
    }
    m
}

