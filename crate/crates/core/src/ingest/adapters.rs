//! Network adapters for block-fee rows (mempool.space-compatible API) and
//! protocol fee/revenue rows (DefiLlama-compatible API), with snapshot
//! replay.
//!
//! Live mode fetches, parses and returns a snapshot for the caller to write.
//! Replay never touches the network: it re-derives the rows from the stored
//! payloads and compares them with the stored rows.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use chrono::{DateTime, NaiveDate, Utc};
use rust_decimal::Decimal;
use serde::Deserialize;
use thiserror::Error;

use super::snapshot::{
    payload_digest, AdapterId, RequestDescriptor, SnapshotError, SnapshotRecord, SnapshotRows,
    SNAPSHOT_SCHEMA_VERSION,
};
use crate::decimal;
use crate::model::{BtcBlockRow, EvidenceGrade, ProtocolFeeRow};

pub const ENV_MEMPOOL_BASE_URL: &str = "EVRC_MEMPOOL_BASE_URL";
pub const ENV_DEFILLAMA_BASE_URL: &str = "EVRC_DEFILLAMA_BASE_URL";
pub const ENV_RETRY_BUDGET: &str = "EVRC_RETRY_BUDGET";
pub const ENV_SNAPSHOT_DIR: &str = "EVRC_SNAPSHOT_DIR";

/// Both adapters serve dashboard data.
pub const ADAPTER_GRADE: EvidenceGrade = EvidenceGrade::G2;

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("adapter configuration: {0}")]
    Config(String),
    #[error("{url}: giving up after {attempts} attempt(s): {message}")]
    Network {
        url: String,
        attempts: u32,
        message: String,
    },
    #[error("response data: {0}")]
    Data(String),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
}

impl FetchError {
    /// True for transport failures that a later attempt might not hit.
    pub fn is_retryable(&self) -> bool {
        matches!(self, FetchError::Network { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Live,
    Replay,
}

#[derive(Clone, Debug)]
pub struct AdapterConfig {
    pub base_url: Option<String>,
    /// Retries after the first attempt.
    pub retry_budget: u32,
    pub timeout: Duration,
    pub snapshot_dir: Option<PathBuf>,
}

impl Default for AdapterConfig {
    fn default() -> Self {
        AdapterConfig {
            base_url: None,
            retry_budget: 3,
            timeout: Duration::from_secs(20),
            snapshot_dir: None,
        }
    }
}

impl AdapterConfig {
    fn base(&self) -> Result<&str, FetchError> {
        match self.base_url.as_deref().map(str::trim) {
            Some(b) if !b.is_empty() => Ok(b.trim_end_matches('/')),
            _ => Err(FetchError::Config("live mode needs a base URL".into())),
        }
    }
}

fn get_with_retries(cfg: &AdapterConfig, url: &str) -> Result<String, FetchError> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(cfg.timeout))
        .build()
        .into();
    let attempts = cfg.retry_budget.saturating_add(1);
    let mut last = String::new();
    for attempt in 0..attempts {
        if attempt > 0 {
            let backoff = 50u64.saturating_mul(1 << attempt.min(5)).min(1000);
            std::thread::sleep(Duration::from_millis(backoff));
        }
        match agent.get(url).call() {
            Ok(mut resp) => match resp.body_mut().read_to_string() {
                Ok(body) => return Ok(body),
                Err(e) => last = e.to_string(),
            },
            Err(e) => last = e.to_string(),
        }
    }
    Err(FetchError::Network {
        url: url.to_string(),
        attempts,
        message: last,
    })
}

// ---------------------------------------------------------------------------
// Block rows

/// Inclusive block-height range.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HeightRange {
    pub start: u64,
    pub end: u64,
}

impl FromStr for HeightRange {
    type Err = String;

    /// `840000..840143`, both ends inclusive.
    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s
            .split_once("..")
            .ok_or_else(|| format!("expected START..END, got {s:?}"))?;
        let b = b.strip_prefix('=').unwrap_or(b);
        let start = a.trim().parse::<u64>().map_err(|e| format!("{a:?}: {e}"))?;
        let end = b.trim().parse::<u64>().map_err(|e| format!("{b:?}: {e}"))?;
        if start > end {
            return Err(format!("range start {start} exceeds end {end}"));
        }
        Ok(HeightRange { start, end })
    }
}

#[derive(Deserialize)]
struct MempoolBlock {
    height: u64,
    extras: MempoolExtras,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct MempoolExtras {
    total_fees: u64,
    reward: u64,
}

const SATS_PER_BTC_SCALE: u32 = 8;

fn parse_block_payload(payload: &str) -> Result<Vec<BtcBlockRow>, String> {
    let blocks: Vec<MempoolBlock> =
        serde_json::from_str(payload).map_err(|e| format!("block list: {e}"))?;
    blocks
        .into_iter()
        .map(|b| {
            let subsidy = b.extras.reward.checked_sub(b.extras.total_fees).ok_or_else(|| {
                format!("block {}: reward is smaller than total fees", b.height)
            })?;
            let btc = |sats: u64| Decimal::from_i128_with_scale(i128::from(sats), SATS_PER_BTC_SCALE);
            Ok(BtcBlockRow {
                height: b.height,
                fees: btc(b.extras.total_fees),
                subsidy: btc(subsidy),
            })
        })
        .collect()
}

/// Merges payload blocks into ascending rows covering exactly `range`.
fn assemble_blocks(payloads: &[String], range: HeightRange) -> Result<Vec<BtcBlockRow>, String> {
    let mut by_height: BTreeMap<u64, BtcBlockRow> = BTreeMap::new();
    for p in payloads {
        for row in parse_block_payload(p)? {
            if row.height < range.start || row.height > range.end {
                continue;
            }
            if let Some(prev) = by_height.get(&row.height) {
                if prev != &row {
                    return Err(format!("block {} reported twice with different values", row.height));
                }
            }
            by_height.insert(row.height, row);
        }
    }
    let rows: Vec<BtcBlockRow> = by_height.into_values().collect();
    let mut expected = range.start;
    for r in &rows {
        if r.height != expected {
            return Err(format!("heights are not contiguous: missing {expected}"));
        }
        expected += 1;
    }
    if expected != range.end + 1 {
        return Err(format!("heights are not contiguous: missing {expected}"));
    }
    Ok(rows)
}

fn range_params(range: HeightRange) -> BTreeMap<String, String> {
    BTreeMap::from([
        ("start".to_string(), range.start.to_string()),
        ("end".to_string(), range.end.to_string()),
    ])
}

fn params_range(params: &BTreeMap<String, String>) -> Result<HeightRange, String> {
    let get = |k: &str| {
        params
            .get(k)
            .ok_or_else(|| format!("request params lack {k:?}"))?
            .parse::<u64>()
            .map_err(|e| format!("{k}: {e}"))
    };
    Ok(HeightRange {
        start: get("start")?,
        end: get("end")?,
    })
}

/// Fetches blocks `range.end` downwards, 15 per request, until the range is
/// covered.
pub fn fetch_block_rows(
    cfg: &AdapterConfig,
    range: HeightRange,
    now: DateTime<Utc>,
) -> Result<(Vec<BtcBlockRow>, SnapshotRecord), FetchError> {
    let base = cfg.base()?;
    let mut paths = Vec::new();
    let mut payloads = Vec::new();
    let mut next = range.end;
    loop {
        let path = format!("/api/v1/blocks/{next}");
        let body = get_with_retries(cfg, &format!("{base}{path}"))?;
        let lowest = parse_block_payload(&body)
            .map_err(FetchError::Data)?
            .iter()
            .map(|r| r.height)
            .min();
        paths.push(path);
        payloads.push(body);
        match lowest {
            Some(low) if low <= range.start => break,
            Some(low) if low <= next && low > 0 => next = low - 1,
            _ => return Err(FetchError::Data(format!("no progress below height {next}"))),
        }
    }
    let rows = assemble_blocks(&payloads, range).map_err(FetchError::Data)?;
    let record = SnapshotRecord {
        schema_version: SNAPSHOT_SCHEMA_VERSION,
        adapter: AdapterId::MempoolBlocks,
        request: RequestDescriptor {
            base_url: base.to_string(),
            paths,
            params: range_params(range),
        },
        captured_at: now,
        payload_sha256: payload_digest(&payloads),
        payloads,
        grade: ADAPTER_GRADE,
        rows: SnapshotRows::BtcBlocks(rows.clone()),
        coverage_gap: false,
        note: None,
    };
    Ok((rows, record))
}

// ---------------------------------------------------------------------------
// Protocol fee rows

/// Inclusive range of UTC days.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DayRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl FromStr for DayRange {
    type Err = String;

    /// `2024-01-01..2024-01-31`, both ends inclusive.
    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s
            .split_once("..")
            .ok_or_else(|| format!("expected START..END, got {s:?}"))?;
        let b = b.strip_prefix('=').unwrap_or(b);
        let day = |t: &str| {
            NaiveDate::parse_from_str(t.trim(), "%Y-%m-%d").map_err(|e| format!("{t:?}: {e}"))
        };
        let (start, end) = (day(a)?, day(b)?);
        if start > end {
            return Err(format!("period start {start} is after end {end}"));
        }
        Ok(DayRange { start, end })
    }
}

impl DayRange {
    fn days(&self) -> usize {
        (self.end - self.start).num_days() as usize + 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeeCapture {
    pub rows: Vec<ProtocolFeeRow>,
    /// The capture does not cover every day of the requested period.
    pub coverage_gap: bool,
}

fn chart_by_day(payload: &str) -> Result<BTreeMap<NaiveDate, Decimal>, String> {
    let v: serde_json::Value =
        serde_json::from_str(payload).map_err(|e| format!("summary: {e}"))?;
    let chart = v
        .get("totalDataChart")
        .and_then(|c| c.as_array())
        .ok_or("summary lacks totalDataChart")?;
    let mut out = BTreeMap::new();
    for point in chart {
        let pair = point.as_array().filter(|p| p.len() == 2).ok_or("chart point is not [ts, value]")?;
        let ts = pair[0].as_i64().ok_or("chart timestamp is not an integer")?;
        let day = DateTime::from_timestamp(ts, 0)
            .ok_or_else(|| format!("timestamp {ts} out of range"))?
            .date_naive();
        let value = match &pair[1] {
            serde_json::Value::Number(n) => decimal::parse(&n.to_string()),
            serde_json::Value::String(s) => decimal::parse(s),
            other => return Err(format!("chart value {other} is not a number")),
        }
        .map_err(|e| format!("chart value: {e}"))?;
        out.insert(day, value);
    }
    Ok(out)
}

fn assemble_fees(payloads: &[String], period: DayRange) -> Result<FeeCapture, String> {
    let [fees, revenue] = payloads else {
        return Err(format!("expected 2 payloads (fees, revenue), found {}", payloads.len()));
    };
    let fees = chart_by_day(fees)?;
    let revenue = chart_by_day(revenue)?;
    let rows: Vec<ProtocolFeeRow> = fees
        .range(period.start..=period.end)
        .filter_map(|(day, fee)| {
            revenue.get(day).map(|rev| ProtocolFeeRow {
                period: day.format("%Y-%m-%d").to_string(),
                fee: *fee,
                revenue: *rev,
            })
        })
        .collect();
    let coverage_gap = rows.len() != period.days();
    Ok(FeeCapture { rows, coverage_gap })
}

fn period_params(protocol: &str, period: DayRange) -> BTreeMap<String, String> {
    BTreeMap::from([
        ("protocol".to_string(), protocol.to_string()),
        ("start".to_string(), period.start.format("%Y-%m-%d").to_string()),
        ("end".to_string(), period.end.format("%Y-%m-%d").to_string()),
    ])
}

fn params_period(params: &BTreeMap<String, String>) -> Result<DayRange, String> {
    let start = params.get("start").ok_or("request params lack \"start\"")?;
    let end = params.get("end").ok_or("request params lack \"end\"")?;
    format!("{start}..{end}").parse()
}

pub fn fee_paths(protocol: &str) -> Vec<String> {
    ["dailyFees", "dailyRevenue"]
        .iter()
        .map(|t| format!("/summary/fees/{protocol}?dataType={t}"))
        .collect()
}

/// A period outside the captured chart is a coverage gap, not an error.
pub fn fetch_protocol_fee_rows(
    cfg: &AdapterConfig,
    protocol: &str,
    period: DayRange,
    now: DateTime<Utc>,
) -> Result<(FeeCapture, SnapshotRecord), FetchError> {
    if !crate::validate::is_token(protocol) {
        return Err(FetchError::Config(format!("invalid protocol id {protocol:?}")));
    }
    let base = cfg.base()?;
    let paths = fee_paths(protocol);
    let mut payloads = Vec::new();
    for p in &paths {
        payloads.push(get_with_retries(cfg, &format!("{base}{p}"))?);
    }
    let capture = assemble_fees(&payloads, period).map_err(FetchError::Data)?;
    let record = SnapshotRecord {
        schema_version: SNAPSHOT_SCHEMA_VERSION,
        adapter: AdapterId::DefillamaFees,
        request: RequestDescriptor {
            base_url: base.to_string(),
            paths,
            params: period_params(protocol, period),
        },
        captured_at: now,
        payload_sha256: payload_digest(&payloads),
        payloads,
        grade: ADAPTER_GRADE,
        rows: SnapshotRows::ProtocolFees(capture.rows.clone()),
        coverage_gap: capture.coverage_gap,
        note: None,
    };
    Ok((capture, record))
}

// ---------------------------------------------------------------------------
// Replay

/// Re-derives rows from the stored payloads and checks them against the
/// stored rows and gap flag. The record's digest was already checked when it
/// was parsed.
pub fn replay(record: &SnapshotRecord, path: &str) -> Result<SnapshotRows, SnapshotError> {
    let payload_err = |message: String| SnapshotError::Payload {
        path: path.to_string(),
        message,
    };
    let (rows, gap) = match record.adapter {
        AdapterId::MempoolBlocks => {
            let range = params_range(&record.request.params).map_err(payload_err)?;
            let rows = assemble_blocks(&record.payloads, range).map_err(payload_err)?;
            (SnapshotRows::BtcBlocks(rows), false)
        }
        AdapterId::DefillamaFees => {
            let period = params_period(&record.request.params).map_err(payload_err)?;
            let c = assemble_fees(&record.payloads, period).map_err(payload_err)?;
            (SnapshotRows::ProtocolFees(c.rows), c.coverage_gap)
        }
    };
    if rows != record.rows || gap != record.coverage_gap {
        return Err(SnapshotError::RowMismatch {
            path: path.to_string(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blocks_payload(top: u64, n: u64) -> String {
        let items: Vec<String> = (0..n)
            .map(|i| {
                let h = top - i;
                format!(r#"{{"height":{h},"extras":{{"totalFees":25000000,"reward":337500000}}}}"#)
            })
            .collect();
        format!("[{}]", items.join(","))
    }

    #[test]
    fn ranges_parse() {
        assert_eq!(
            "5..9".parse::<HeightRange>().unwrap(),
            HeightRange { start: 5, end: 9 }
        );
        assert!("9..5".parse::<HeightRange>().is_err());
        let d: DayRange = "2024-01-01..=2024-01-03".parse().unwrap();
        assert_eq!(d.days(), 3);
    }

    #[test]
    fn block_payloads_convert_sats_to_btc() {
        let rows = assemble_blocks(&[blocks_payload(20, 15)], HeightRange { start: 10, end: 20 })
            .unwrap();
        assert_eq!(rows.len(), 11);
        assert_eq!(rows[0].height, 10);
        assert_eq!(rows[0].fees, Decimal::from_str("0.25").unwrap());
        assert_eq!(rows[0].subsidy, Decimal::from_str("3.125").unwrap());
    }

    #[test]
    fn missing_heights_are_a_data_error() {
        let err = assemble_blocks(&[blocks_payload(20, 5)], HeightRange { start: 10, end: 20 })
            .unwrap_err();
        assert!(err.contains("missing 10"));
    }

    fn chart(points: &[(i64, &str)]) -> String {
        let items: Vec<String> = points.iter().map(|(t, v)| format!("[{t},{v}]")).collect();
        format!(r#"{{"totalDataChart":[{}]}}"#, items.join(","))
    }

    #[test]
    fn fee_rows_join_by_day_and_flag_gaps() {
        let day = 86_400;
        let jan1 = 1_704_067_200;
        let fees = chart(&[(jan1, "100.5"), (jan1 + day, "80")]);
        let rev = chart(&[(jan1, "10"), (jan1 + day, "8.25")]);
        let full = assemble_fees(&[fees.clone(), rev.clone()], "2024-01-01..2024-01-02".parse().unwrap())
            .unwrap();
        assert_eq!(full.rows.len(), 2);
        assert!(!full.coverage_gap);
        assert_eq!(full.rows[1].revenue, Decimal::from_str("8.25").unwrap());

        let outside = assemble_fees(&[fees, rev], "2023-06-01..2023-06-02".parse().unwrap()).unwrap();
        assert!(outside.rows.is_empty());
        assert!(outside.coverage_gap);
    }

    #[test]
    fn live_mode_without_base_url_is_a_config_error() {
        let err = fetch_block_rows(
            &AdapterConfig::default(),
            HeightRange { start: 1, end: 2 },
            DateTime::UNIX_EPOCH,
        )
        .unwrap_err();
        assert!(matches!(err, FetchError::Config(_)));
    }
}
