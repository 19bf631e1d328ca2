//! `evrc`: validate and code EVRC case bundles, scan fee-share windows, and
//! capture or replay adapter snapshots.
//!
//! Exit status: 0 ok, 1 schema or input violations, 2 configuration error,
//! 3 network or integrity error, 4 internal invariant failure.

mod fail;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use evrc_core::coverage::btc_fee_share_with;
use evrc_core::ingest::adapters::{
    self, AdapterConfig, DayRange, HeightRange, ENV_DEFILLAMA_BASE_URL, ENV_MEMPOOL_BASE_URL,
    ENV_RETRY_BUDGET, ENV_SNAPSHOT_DIR,
};
use evrc_core::ingest::snapshot::{AdapterId, SnapshotRecord, SnapshotRows};
use evrc_core::ingest::{load_case, rows};
use evrc_core::numerator::check_config;
use evrc_core::report::{check_invariants, to_json, to_text};
use evrc_core::{decimal, run_case, CaseBundle, CaseReport, Strategy};

use fail::Failure;

#[derive(Parser)]
#[command(name = "evrc", version, about = "External Value Routing Closure coding engine")]
struct Cli {
    /// Suppress the step trace and progress output.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Load a case directory and list schema violations.
    Validate { case: PathBuf },
    /// Run the full coding order and write the report.
    Code(CodeArgs),
    /// Rolling fee share over a block-row CSV.
    Feeshare {
        csv: PathBuf,
        #[arg(long)]
        window: usize,
    },
    /// Capture or replay an adapter snapshot.
    Fetch(FetchArgs),
}

#[derive(Args)]
struct CodeArgs {
    /// Case directory. Omit when using --cases.
    case: Option<PathBuf>,
    /// Report path; stdout when absent.
    #[arg(long, conflicts_with = "cases")]
    out: Option<PathBuf>,
    /// Glob over case directories, coded in parallel.
    #[arg(long, requires = "out_dir", conflicts_with = "case")]
    cases: Option<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AdapterArg {
    MempoolBlocks,
    DefillamaFees,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Live,
    Replay,
}

#[derive(Args)]
struct FetchArgs {
    #[arg(value_enum)]
    adapter: AdapterArg,
    /// Block heights, `START..END` inclusive (mempool-blocks).
    #[arg(long)]
    range: Option<String>,
    /// Protocol id (defillama-fees).
    #[arg(long)]
    protocol: Option<String>,
    /// Days, `YYYY-MM-DD..YYYY-MM-DD` inclusive (defillama-fees).
    #[arg(long)]
    period: Option<String>,
    #[arg(long, value_enum, default_value_t = ModeArg::Replay)]
    mode: ModeArg,
    /// Snapshot file to replay, or to write in live mode.
    #[arg(long)]
    snapshot: Option<PathBuf>,
    /// Directory for live snapshots when --snapshot is not given.
    #[arg(long, env = ENV_SNAPSHOT_DIR)]
    snapshot_dir: Option<PathBuf>,
    #[arg(long)]
    base_url: Option<String>,
    /// Retries after the first attempt.
    #[arg(long, env = ENV_RETRY_BUDGET, default_value_t = 3)]
    retries: u32,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 20)]
    timeout: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate { case } => cmd_validate(&cli, case),
        Command::Code(args) => cmd_code(&cli, args),
        Command::Feeshare { csv, window } => cmd_feeshare(&cli, csv, *window),
        Command::Fetch(args) => cmd_fetch(&cli, args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            f.print();
            ExitCode::from(f.status)
        }
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// validate

/// Alpha disclosure is checked over the flows the numerator will read.
fn check_numerator_config(bundle: &CaseBundle) -> Result<(), Failure> {
    let flows: Vec<_> = bundle
        .flows
        .iter()
        .filter(|f| f.period_label == bundle.header.case_period)
        .cloned()
        .collect();
    check_config(&flows, bundle.header.numerator.as_ref())
        .map(|_| ())
        .map_err(|e| Failure::config(e.to_string()))
}

fn cmd_validate(cli: &Cli, case: &Path) -> Result<(), Failure> {
    let bundle = load_case(case).map_err(Failure::from_load)?;
    check_numerator_config(&bundle)?;
    if cli.quiet {
        return Ok(());
    }
    match cli.format {
        Format::Json => println!(
            "{}",
            serde_json::json!({
                "case": bundle.case_id(),
                "violations": [],
                "flows": bundle.flows.len(),
                "routes": bundle.routes.len(),
                "sources": bundle.sources.len(),
            })
        ),
        Format::Text => println!(
            "{}: ok ({} flows, {} routes, {} sources)",
            case.display(),
            bundle.flows.len(),
            bundle.routes.len(),
            bundle.sources.len()
        ),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// code

fn render(report: &CaseReport, format: Format) -> String {
    match format {
        Format::Json => to_json(report),
        Format::Text => to_text(report),
    }
}

/// Loads and codes one case. Nothing is written here, so a failure at any
/// stage leaves no report behind.
fn code_one(case: &Path, strategy: Strategy) -> Result<(CaseReport, Vec<String>), Failure> {
    let bundle = load_case(case).map_err(Failure::from_load)?;
    let (report, trace) = run_case(&bundle, strategy).map_err(Failure::from_pipeline)?;
    check_invariants(&report).map_err(Failure::from_pipeline)?;
    Ok((report, trace.iter().map(ToString::to_string).collect()))
}

fn cmd_code(cli: &Cli, args: &CodeArgs) -> Result<(), Failure> {
    if let Some(pattern) = &args.cases {
        let out_dir = args.out_dir.as_deref().expect("clap requires --out-dir");
        return code_many(cli, pattern, out_dir);
    }
    let case = args
        .case
        .as_deref()
        .ok_or_else(|| Failure::config("give a case directory or --cases GLOB".into()))?;
    let (report, trace) = code_one(case, Strategy::Sequential)?;
    if !cli.quiet {
        for line in &trace {
            eprintln!("{line}");
        }
    }
    let text = render(&report, cli.format);
    match &args.out {
        Some(path) => write_text(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn code_many(cli: &Cli, pattern: &str, out_dir: &Path) -> Result<(), Failure> {
    let mut dirs: Vec<PathBuf> = glob::glob(pattern)
        .map_err(|e| Failure::config(format!("--cases {pattern:?}: {e}")))?
        .filter_map(Result::ok)
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(Failure::input(format!("--cases {pattern:?} matched no directories")));
    }
    let ext = match cli.format {
        Format::Json => "json",
        Format::Text => "txt",
    };
    // each case is isolated: one failure does not stop the others
    let results: Vec<(PathBuf, Result<PathBuf, Failure>)> = dirs
        .par_iter()
        .map(|dir| {
            let r = code_one(dir, Strategy::Sequential).and_then(|(report, _)| {
                let path = out_dir.join(format!("{}.{ext}", report.case_id));
                write_text(&path, &render(&report, cli.format))?;
                Ok(path)
            });
            (dir.clone(), r)
        })
        .collect();

    let mut worst: Option<Failure> = None;
    for (dir, r) in results {
        match r {
            Ok(path) if !cli.quiet => eprintln!("{}: wrote {}", dir.display(), path.display()),
            Ok(_) => {}
            Err(f) => {
                eprintln!("{}: failed", dir.display());
                f.print();
                if worst.as_ref().is_none_or(|w| f.status > w.status) {
                    worst = Some(f.silenced());
                }
            }
        }
    }
    worst.map_or(Ok(()), Err)
}

// ---------------------------------------------------------------------------
// feeshare

fn cmd_feeshare(cli: &Cli, csv: &Path, window: usize) -> Result<(), Failure> {
    let text = read_text(csv)?;
    let rows = rows::parse_btc_blocks(&text, &csv.display().to_string())
        .map_err(Failure::from_load)?;
    let series = btc_fee_share_with(&rows, window, Strategy::default())
        .map_err(|e| Failure::input(e.to_string()))?;
    match cli.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&series).expect("series serializes");
            s.push('\n');
            print!("{s}");
        }
        Format::Text => {
            if !cli.quiet {
                println!("start_height share");
                for w in &series.shares {
                    println!("{} {}", w.start_height, decimal::canonical(w.share));
                }
                for h in &series.skipped {
                    println!("{h} skipped (zero reward)");
                }
            }
            match (series.max_share, series.max_window_start) {
                (Some(m), Some(h)) => println!(
                    "max {window}-block share {} at height {h}",
                    decimal::canonical(m)
                ),
                _ => println!("no window with a non-zero reward"),
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// fetch

enum Request {
    Blocks(HeightRange),
    Fees { protocol: String, period: DayRange },
}

impl Request {
    fn from_args(args: &FetchArgs) -> Result<Option<Self>, Failure> {
        let bad = |flag: &str, e: String| Failure::config(format!("--{flag}: {e}"));
        Ok(match args.adapter {
            AdapterArg::MempoolBlocks => match &args.range {
                Some(r) => Some(Request::Blocks(r.parse().map_err(|e| bad("range", e))?)),
                None => None,
            },
            AdapterArg::DefillamaFees => match (&args.protocol, &args.period) {
                (Some(p), Some(d)) => Some(Request::Fees {
                    protocol: p.clone(),
                    period: d.parse().map_err(|e| bad("period", e))?,
                }),
                (None, None) => None,
                _ => return Err(Failure::config("give both --protocol and --period".into())),
            },
        })
    }

    fn default_file(&self) -> String {
        match self {
            Request::Blocks(r) => format!("mempool_blocks_{}_{}.json", r.start, r.end),
            Request::Fees { protocol, period } => format!(
                "defillama_fees_{protocol}_{}_{}.json",
                period.start.format("%Y%m%d"),
                period.end.format("%Y%m%d")
            ),
        }
    }

    /// The request parameters a matching snapshot must carry.
    fn params(&self) -> Vec<(&'static str, String)> {
        match self {
            Request::Blocks(r) => vec![("start", r.start.to_string()), ("end", r.end.to_string())],
            Request::Fees { protocol, period } => vec![
                ("protocol", protocol.clone()),
                ("start", period.start.format("%Y-%m-%d").to_string()),
                ("end", period.end.format("%Y-%m-%d").to_string()),
            ],
        }
    }
}

fn adapter_id(a: AdapterArg) -> AdapterId {
    match a {
        AdapterArg::MempoolBlocks => AdapterId::MempoolBlocks,
        AdapterArg::DefillamaFees => AdapterId::DefillamaFees,
    }
}

fn row_count(rows: &SnapshotRows) -> usize {
    match rows {
        SnapshotRows::BtcBlocks(r) => r.len(),
        SnapshotRows::ProtocolFees(r) => r.len(),
    }
}

fn report_snapshot(cli: &Cli, verb: &str, path: &Path, record: &SnapshotRecord) {
    match cli.format {
        Format::Json => println!(
            "{}",
            serde_json::json!({
                "snapshot": path.display().to_string(),
                "adapter": record.adapter.as_str(),
                "rows": row_count(&record.rows),
                "coverage_gap": record.coverage_gap,
                "payload_sha256": record.payload_sha256,
            })
        ),
        Format::Text if !cli.quiet => println!(
            "{verb} {} rows from {} ({}){}; payload sha256 {}",
            row_count(&record.rows),
            path.display(),
            record.adapter.as_str(),
            if record.coverage_gap { ", coverage gap" } else { "" },
            record.payload_sha256
        ),
        Format::Text => {}
    }
}

fn cmd_fetch(cli: &Cli, args: &FetchArgs) -> Result<(), Failure> {
    let request = Request::from_args(args)?;
    match args.mode {
        ModeArg::Replay => {
            let path = args
                .snapshot
                .as_deref()
                .ok_or_else(|| Failure::config("replay mode needs --snapshot".into()))?;
            let record = SnapshotRecord::read(path).map_err(Failure::from_snapshot)?;
            if record.adapter != adapter_id(args.adapter) {
                return Err(Failure::input(format!(
                    "{} was captured by {}, not {}",
                    path.display(),
                    record.adapter.as_str(),
                    adapter_id(args.adapter).as_str()
                )));
            }
            if let Some(req) = &request {
                for (k, v) in req.params() {
                    if record.request.params.get(k) != Some(&v) {
                        return Err(Failure::input(format!(
                            "{}: snapshot {k} does not match the requested {v}",
                            path.display()
                        )));
                    }
                }
            }
            adapters::replay(&record, &path.display().to_string())
                .map_err(Failure::from_snapshot)?;
            report_snapshot(cli, "replayed", path, &record);
            Ok(())
        }
        ModeArg::Live => {
            let request = request.ok_or_else(|| {
                Failure::config("live mode needs --range, or --protocol and --period".into())
            })?;
            let env_key = match args.adapter {
                AdapterArg::MempoolBlocks => ENV_MEMPOOL_BASE_URL,
                AdapterArg::DefillamaFees => ENV_DEFILLAMA_BASE_URL,
            };
            let cfg = AdapterConfig {
                base_url: args
                    .base_url
                    .clone()
                    .or_else(|| std::env::var(env_key).ok()),
                retry_budget: args.retries,
                timeout: Duration::from_secs(args.timeout),
                snapshot_dir: args.snapshot_dir.clone(),
            };
            let path = match (&args.snapshot, &cfg.snapshot_dir) {
                (Some(p), _) => p.clone(),
                (None, Some(dir)) => dir.join(request.default_file()),
                (None, None) => {
                    return Err(Failure::config(format!(
                        "live mode needs --snapshot, --snapshot-dir or {ENV_SNAPSHOT_DIR}"
                    )))
                }
            };
            let now = chrono::Utc::now();
            let record = match &request {
                Request::Blocks(range) => adapters::fetch_block_rows(&cfg, *range, now)
                    .map_err(Failure::from_fetch)?
                    .1,
                Request::Fees { protocol, period } => {
                    adapters::fetch_protocol_fee_rows(&cfg, protocol, *period, now)
                        .map_err(Failure::from_fetch)?
                        .1
                }
            };
            record.write_atomic(&path).map_err(Failure::from_snapshot)?;
            // the written file must replay to the same rows
            let back = SnapshotRecord::read(&path).map_err(Failure::from_snapshot)?;
            adapters::replay(&back, &path.display().to_string()).map_err(Failure::from_snapshot)?;
            report_snapshot(cli, "captured", &path, &record);
            Ok(())
        }
    }
}
