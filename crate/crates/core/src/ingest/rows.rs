//! CSV row files: header row, UTF-8, `.` decimal separator, no thousands
//! separators.

use csv::StringRecord;
use rust_decimal::Decimal;

use crate::decimal;
use crate::error::LoadError;
use crate::model::{BtcBlockRow, EthRewardRow, ProtocolFeeRow};

pub const BTC_HEADER: [&str; 3] = ["height", "fees", "subsidy"];
pub const ETH_HEADER: [&str; 6] = [
    "window",
    "priority_fees_to_proposer",
    "proposer_mev",
    "consensus_issuance",
    "penalties_slashing",
    "base_fee_burn",
];
pub const PROTOCOL_FEE_HEADER: [&str; 3] = ["period", "fee", "revenue"];

fn rows_error(file: &str, message: impl Into<String>) -> LoadError {
    LoadError::Rows {
        file: file.to_string(),
        message: message.into(),
    }
}

fn records(text: &str, file: &str, header: &[&str]) -> Result<Vec<(u64, StringRecord)>, LoadError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let found = rdr
        .headers()
        .map_err(|e| rows_error(file, e.to_string()))?
        .clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(rows_error(
            file,
            format!(
                "header must be {:?}, found {:?}",
                header.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| rows_error(file, e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        out.push((line, rec));
    }
    Ok(out)
}

fn dec(rec: &StringRecord, i: usize, file: &str, line: u64) -> Result<Decimal, LoadError> {
    let raw = rec.get(i).unwrap_or_default();
    if raw.contains(',') {
        return Err(rows_error(file, format!("line {line}: thousands separators are not allowed")));
    }
    decimal::parse(raw).map_err(|e| rows_error(file, format!("line {line}: {raw:?}: {e}")))
}

pub fn parse_btc_blocks(text: &str, file: &str) -> Result<Vec<BtcBlockRow>, LoadError> {
    records(text, file, &BTC_HEADER)?
        .into_iter()
        .map(|(line, r)| {
            let height = r
                .get(0)
                .unwrap_or_default()
                .parse::<u64>()
                .map_err(|e| rows_error(file, format!("line {line}: height: {e}")))?;
            Ok(BtcBlockRow {
                height,
                fees: dec(&r, 1, file, line)?,
                subsidy: dec(&r, 2, file, line)?,
            })
        })
        .collect()
}

pub fn parse_eth_rewards(text: &str, file: &str) -> Result<Vec<EthRewardRow>, LoadError> {
    records(text, file, &ETH_HEADER)?
        .into_iter()
        .map(|(line, r)| {
            Ok(EthRewardRow {
                window: r.get(0).unwrap_or_default().to_string(),
                priority_fees_to_proposer: dec(&r, 1, file, line)?,
                proposer_mev: dec(&r, 2, file, line)?,
                consensus_issuance: dec(&r, 3, file, line)?,
                penalties_slashing: dec(&r, 4, file, line)?,
                base_fee_burn: dec(&r, 5, file, line)?,
            })
        })
        .collect()
}

pub fn parse_protocol_fees(text: &str, file: &str) -> Result<Vec<ProtocolFeeRow>, LoadError> {
    records(text, file, &PROTOCOL_FEE_HEADER)?
        .into_iter()
        .map(|(line, r)| {
            Ok(ProtocolFeeRow {
                period: r.get(0).unwrap_or_default().to_string(),
                fee: dec(&r, 1, file, line)?,
                revenue: dec(&r, 2, file, line)?,
            })
        })
        .collect()
}

fn write(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    // writing to a Vec cannot fail
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(&r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv output is utf-8")
}

pub fn write_btc_blocks(rows: &[BtcBlockRow]) -> String {
    write(
        &BTC_HEADER,
        rows.iter().map(|r| {
            vec![
                r.height.to_string(),
                decimal::canonical(r.fees),
                decimal::canonical(r.subsidy),
            ]
        }),
    )
}

pub fn write_eth_rewards(rows: &[EthRewardRow]) -> String {
    write(
        &ETH_HEADER,
        rows.iter().map(|r| {
            vec![
                r.window.clone(),
                decimal::canonical(r.priority_fees_to_proposer),
                decimal::canonical(r.proposer_mev),
                decimal::canonical(r.consensus_issuance),
                decimal::canonical(r.penalties_slashing),
                decimal::canonical(r.base_fee_burn),
            ]
        }),
    )
}

pub fn write_protocol_fees(rows: &[ProtocolFeeRow]) -> String {
    write(
        &PROTOCOL_FEE_HEADER,
        rows.iter().map(|r| {
            vec![
                r.period.clone(),
                decimal::canonical(r.fee),
                decimal::canonical(r.revenue),
            ]
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::str::FromStr;

    #[test]
    fn block_rows_parse_exactly() {
        let rows = parse_btc_blocks("height,fees,subsidy\n840000,0.25,6.25\n840001,3.1,3.125\n", "b.csv")
            .unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].subsidy, Decimal::from_str("3.125").unwrap());
        assert_eq!(parse_btc_blocks(&write_btc_blocks(&rows), "b.csv").unwrap(), rows);
    }

    #[test]
    fn wrong_header_is_rejected() {
        let err = parse_btc_blocks("height,fee,subsidy\n1,1,1\n", "b.csv").unwrap_err();
        assert!(err.to_string().contains("header"));
    }

    #[test]
    fn thousands_separator_is_rejected() {
        let err = parse_protocol_fees("period,fee,revenue\n2024-01-01,\"1,000\",5\n", "p.csv")
            .unwrap_err();
        assert!(err.to_string().contains("thousands"));
    }

    #[test]
    fn eth_rows_keep_burn_column() {
        let text = "window,priority_fees_to_proposer,proposer_mev,consensus_issuance,penalties_slashing,base_fee_burn\nw1,10,5,100,2,500\n";
        let rows = parse_eth_rewards(text, "e.csv").unwrap();
        assert_eq!(rows[0].base_fee_burn, Decimal::from(500));
        assert_eq!(write_eth_rewards(&rows), text);
    }
}
