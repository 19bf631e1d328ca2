use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn evrc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evrc"))
        .current_dir(root())
        .env_remove("EVRC_MEMPOOL_BASE_URL")
        .env_remove("EVRC_DEFILLAMA_BASE_URL")
        .env_remove("EVRC_SNAPSHOT_DIR")
        .env_remove("EVRC_RETRY_BUDGET")
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Copies a shipped case into a temporary directory for editing.
fn scratch_case(name: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let src = root().join("cases").join(name);
    for entry in std::fs::read_dir(&src).unwrap() {
        let p = entry.unwrap().path();
        if p.is_file() {
            std::fs::copy(&p, dir.path().join(p.file_name().unwrap())).unwrap();
        }
    }
    dir
}

fn edit(dir: &Path, file: &str, from: &str, to: &str) {
    let p = dir.join(file);
    let text = std::fs::read_to_string(&p).unwrap();
    assert!(text.contains(from), "{file} lacks {from:?}");
    std::fs::write(&p, text.replacen(from, to, 1)).unwrap();
}

#[test]
fn validate_shipped_case() {
    let o = evrc(&["validate", "cases/steem"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("ok"));
}

#[test]
fn dangling_route_is_one_violation() {
    let dir = scratch_case("youtube");
    edit(dir.path(), "routes.json", "\"flow_id\": \"ads\"", "\"flow_id\": \"nope\"");
    let o = evrc(&["validate", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let errors: Vec<_> = stderr(&o).lines().filter(|l| l.starts_with("error:")).map(String::from).collect();
    assert_eq!(errors.len(), 1, "{errors:?}");
    assert!(errors[0].contains("routes[0].flow_id"));
}

#[test]
fn missing_alpha_with_mixed_flows_is_a_config_error() {
    let dir = scratch_case("ethereum");
    edit(
        dir.path(),
        "case.json",
        "\"numerator\": {\n    \"alpha\": \"0.5\",\n    \"note\": \"half of builder payments treated as use-driven\"\n  },",
        "",
    );
    let o = evrc(&["validate", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = evrc(&["code", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn xrp_report_carries_b3() {
    let o = evrc(&["code", "--quiet", "cases/xrp"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("B3 burn_capture_mismatch"));
}

#[test]
fn bitcoin_json_allows_the_mechanism_claim() {
    let o = evrc(&["code", "--quiet", "--format", "json", "cases/bitcoin"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let claim = v["claims"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["template"] == "MECHANISM_ROUTE_EXISTS")
        .unwrap();
    assert_eq!(claim["allowed"], true);
}

#[test]
fn corrupt_bundle_writes_no_report() {
    let dir = scratch_case("xrp");
    std::fs::write(dir.path().join("flows.json"), "{ not json").unwrap();
    let out = dir.path().join("report.json");
    let o = evrc(&["code", dir.path().to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("flows.json:1:"));
    assert!(!out.exists());
}

#[test]
fn trace_puts_admissibility_before_coverage() {
    let o = evrc(&["code", "cases/aave", "--out", "/dev/null"]);
    assert_eq!(o.status.code(), Some(0));
    let trace = stderr(&o);
    let numbered: Vec<&str> = trace.lines().filter(|l| l.starts_with('[')).collect();
    assert_eq!(numbered.len(), 8);
    let adm = trace.find("[6/8] admissibility").unwrap();
    let cov = trace.find("[7/8] coverage").unwrap();
    assert!(adm < cov);
    assert!(evrc(&["code", "-q", "cases/aave", "--out", "/dev/null"]).stderr.is_empty());
}

#[test]
fn batch_mode_codes_every_case() {
    let out = tempfile::tempdir().unwrap();
    let o = evrc(&[
        "code",
        "--quiet",
        "--format",
        "json",
        "--cases",
        "cases/*",
        "--out-dir",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let single = evrc(&["code", "--quiet", "--format", "json", "cases/usdc"]);
    let batch = std::fs::read(out.path().join("usdc.json")).unwrap();
    assert_eq!(batch, single.stdout);
    assert_eq!(std::fs::read_dir(out.path()).unwrap().count(), 8);
}

#[test]
fn feeshare_finds_the_constructed_window() {
    let o = evrc(&["feeshare", "fixtures/btc_blocks_288.csv", "--window", "144", "--quiet"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "max 144-block share 0.74 at height 839928");
}

#[test]
fn feeshare_window_larger_than_rows_fails() {
    let o = evrc(&["feeshare", "fixtures/btc_blocks_288.csv", "--window", "289"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("exceeds"));
}

#[test]
fn feeshare_single_row() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("one.csv");
    std::fs::write(&csv, "height,fees,subsidy\n840000,37.626,3.125\n").unwrap();
    let o = evrc(&["feeshare", csv.to_str().unwrap(), "--window", "1", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let expected = rust_decimal::Decimal::new(37626, 3) / rust_decimal::Decimal::new(40751, 3);
    let got: rust_decimal::Decimal = v["max_share"].as_str().unwrap().parse().unwrap();
    assert_eq!(got, expected);
}

#[test]
fn feeshare_gap_fails() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("gap.csv");
    std::fs::write(&csv, "height,fees,subsidy\n1,1,1\n3,1,1\n").unwrap();
    let o = evrc(&["feeshare", csv.to_str().unwrap(), "--window", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn replay_of_committed_snapshot_keeps_its_digest() {
    let path = "cases/bitcoin/snapshots/mempool_blocks.json";
    let text = std::fs::read_to_string(root().join(path)).unwrap();
    let record: serde_json::Value = serde_json::from_str(&text).unwrap();
    let o = evrc(&["fetch", "mempool-blocks", "--mode", "replay", "--snapshot", path, "--range", "839856..840143", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["payload_sha256"], record["payload_sha256"]);
    assert_eq!(v["rows"], 288);

    let o = evrc(&["fetch", "defillama-fees", "--snapshot", "cases/aave/snapshots/defillama_fees.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn replay_of_tampered_snapshot_is_an_integrity_failure() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(root().join("cases/bitcoin/snapshots/mempool_blocks.json")).unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, text.replacen("\\\"height\\\":840143", "\\\"height\\\":840142", 1)).unwrap();
    let o = evrc(&["fetch", "mempool-blocks", "--snapshot", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));

    let case = scratch_case("aave");
    let snaps = case.path().join("snapshots");
    std::fs::create_dir(&snaps).unwrap();
    let aave = std::fs::read_to_string(root().join("cases/aave/snapshots/defillama_fees.json")).unwrap();
    std::fs::write(snaps.join("defillama_fees.json"), aave.replacen("[1709251200,", "[1709251200.5,", 1)).unwrap();
    let o = evrc(&["code", case.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn live_without_base_url_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = evrc(&["fetch", "mempool-blocks", "--mode", "live", "--range", "1..2", "--snapshot-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn unreachable_host_fails_after_bounded_retries() {
    // bind then drop, so nothing listens on the port
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let dir = tempfile::tempdir().unwrap();
    let o = evrc(&[
        "fetch", "mempool-blocks", "--mode", "live", "--range", "1..2",
        "--base-url", &format!("http://127.0.0.1:{port}"),
        "--retries", "2", "--timeout", "2",
        "--snapshot-dir", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let err = stderr(&o);
    assert!(err.contains("3 attempt(s)") && err.contains("retryable"), "{err}");
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

/// Serves `/api/v1/blocks/{h}` pages of 15 blocks, as the mempool API does.
fn serve_blocks() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request = String::new();
            reader.read_line(&mut request).unwrap();
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap() == 0 || line == "\r\n" {
                    break;
                }
            }
            let top: u64 = request
                .split_whitespace()
                .nth(1)
                .and_then(|p| p.rsplit('/').next())
                .and_then(|h| h.parse().ok())
                .unwrap_or(0);
            let blocks: Vec<String> = (0..15)
                .filter_map(|i| top.checked_sub(i))
                .map(|h| {
                    let fees = 1_000_000 + h % 7 * 100_000;
                    format!(r#"{{"height":{h},"extras":{{"totalFees":{fees},"reward":{}}}}}"#, fees + 312_500_000)
                })
                .collect();
            let body = format!("[{}]", blocks.join(","));
            let _ = write!(
                stream,
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
        }
    });
    format!("http://{addr}")
}

#[test]
fn live_fetch_writes_a_replayable_snapshot() {
    let base = serve_blocks();
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_evrc"))
        .env("EVRC_MEMPOOL_BASE_URL", &base)
        .env("EVRC_SNAPSHOT_DIR", dir.path())
        .args(["fetch", "mempool-blocks", "--mode", "live", "--range", "1000..1039", "--format", "json"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rows"], 40);

    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(files.len(), 1, "no temporary files left behind");
    let snap = files[0].to_str().unwrap();
    assert!(snap.ends_with("mempool_blocks_1000_1039.json"));
    let o = evrc(&["fetch", "mempool-blocks", "--snapshot", snap, "--range", "1000..1039", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let replayed: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(replayed["payload_sha256"], v["payload_sha256"]);
}
