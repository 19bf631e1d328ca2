//! Reports for the shipped cases, compared byte for byte with the files in
//! `tests/golden`. Set `UPDATE_GOLDEN=1` to rewrite them.

use std::path::{Path, PathBuf};
use std::process::Command;

const CASES: [&str; 8] = [
    "aave", "bitcoin", "ethereum", "filecoin", "steem", "usdc", "xrp", "youtube",
];

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn code(case: &str, format: &str) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_evrc"))
        .current_dir(root())
        .args(["code", "--quiet", "--format", format])
        .arg(format!("cases/{case}"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{case}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn check(name: &str, actual: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e} (run with UPDATE_GOLDEN=1)", path.display()));
    assert!(expected == actual, "{name} differs from the golden report");
}

#[test]
fn json_reports_match_golden() {
    for c in CASES {
        check(&format!("{c}.json"), &code(c, "json"));
    }
}

#[test]
fn text_reports_match_golden() {
    for c in CASES {
        check(&format!("{c}.txt"), &code(c, "text"));
    }
}
