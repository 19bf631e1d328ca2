//! Capture records for adapter fetches.
//!
//! A snapshot keeps the raw response bodies, a digest over them, and the rows
//! parsed from them. Replay recomputes both and refuses the file if either
//! disagrees.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{BtcBlockRow, EvidenceGrade, ProtocolFeeRow};

pub const SNAPSHOT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}:{line}:{column}: {message}")]
    Malformed {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: unsupported snapshot schema_version {found}")]
    Version { path: String, found: u64 },
    #[error("{path}: payload digest mismatch (recorded {recorded}, computed {computed})")]
    Integrity {
        path: String,
        recorded: String,
        computed: String,
    },
    #[error("{path}: stored rows differ from rows re-parsed from the payloads")]
    RowMismatch { path: String },
    #[error("{path}: adapter captures cannot be graded G1")]
    GradeG1 { path: String },
    #[error("{path}: adapter {adapter} cannot produce {rows} rows")]
    AdapterRows {
        path: String,
        adapter: &'static str,
        rows: &'static str,
    },
    #[error("{path}: payload: {message}")]
    Payload { path: String, message: String },
}

impl SnapshotError {
    /// Integrity failures map to the network/integrity exit status; the rest
    /// are input errors.
    pub fn is_integrity(&self) -> bool {
        matches!(
            self,
            SnapshotError::Integrity { .. } | SnapshotError::RowMismatch { .. }
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdapterId {
    MempoolBlocks,
    DefillamaFees,
}

impl AdapterId {
    pub fn as_str(self) -> &'static str {
        match self {
            AdapterId::MempoolBlocks => "mempool_blocks",
            AdapterId::DefillamaFees => "defillama_fees",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequestDescriptor {
    pub base_url: String,
    /// Request paths in the order they were issued; one payload each.
    pub paths: Vec<String>,
    pub params: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "items", rename_all = "snake_case")]
pub enum SnapshotRows {
    BtcBlocks(Vec<BtcBlockRow>),
    ProtocolFees(Vec<ProtocolFeeRow>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotRecord {
    pub schema_version: u32,
    pub adapter: AdapterId,
    pub request: RequestDescriptor,
    pub captured_at: DateTime<Utc>,
    pub payload_sha256: String,
    pub payloads: Vec<String>,
    pub grade: EvidenceGrade,
    pub rows: SnapshotRows,
    /// The capture does not cover the requested range or period.
    #[serde(default)]
    pub coverage_gap: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// sha256 over each payload prefixed by its byte length (u64, big endian),
/// so payload boundaries are part of the digest.
pub fn payload_digest(payloads: &[String]) -> String {
    let mut h = Sha256::new();
    for p in payloads {
        h.update((p.len() as u64).to_be_bytes());
        h.update(p.as_bytes());
    }
    hex::encode(h.finalize())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl SnapshotRecord {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("snapshot serializes");
        s.push('\n');
        s
    }

    /// Parses and checks version, grade and digest. Row re-derivation is
    /// done by the adapter layer.
    pub fn from_json(text: &str, path: &str) -> Result<Self, SnapshotError> {
        #[derive(Deserialize)]
        struct Probe {
            schema_version: Option<u64>,
        }
        let malformed = |e: serde_json::Error| SnapshotError::Malformed {
            path: path.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        };
        let probe: Probe = serde_json::from_str(text).map_err(malformed)?;
        if let Some(v) = probe.schema_version {
            if v != u64::from(SNAPSHOT_SCHEMA_VERSION) {
                return Err(SnapshotError::Version {
                    path: path.to_string(),
                    found: v,
                });
            }
        }
        let record: SnapshotRecord = serde_json::from_str(text).map_err(malformed)?;
        if record.grade == EvidenceGrade::G1 {
            return Err(SnapshotError::GradeG1 {
                path: path.to_string(),
            });
        }
        let computed = payload_digest(&record.payloads);
        if computed != record.payload_sha256 {
            return Err(SnapshotError::Integrity {
                path: path.to_string(),
                recorded: record.payload_sha256.clone(),
                computed,
            });
        }
        Ok(record)
    }

    pub fn read(path: &Path) -> Result<Self, SnapshotError> {
        let text = std::fs::read_to_string(path).map_err(|e| SnapshotError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text, &path.display().to_string())
    }

    /// Writes to a temporary file in the target directory, then renames it
    /// into place.
    pub fn write_atomic(&self, path: &Path) -> Result<(), SnapshotError> {
        let io = |e: std::io::Error| SnapshotError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        std::fs::create_dir_all(dir).map_err(io)?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
        tmp.write_all(self.to_json().as_bytes()).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(path).map_err(|e| io(e.error))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_depends_on_payload_boundaries() {
        let a = payload_digest(&["ab".into(), "c".into()]);
        let b = payload_digest(&["a".into(), "bc".into()]);
        assert_ne!(a, b);
        assert_eq!(a.len(), 64);
    }
}
