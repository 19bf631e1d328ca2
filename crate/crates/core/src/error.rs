use std::path::PathBuf;

use thiserror::Error;

use crate::validate::Violation;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing required case files: {}", .0.join(", "))]
    MissingFiles(Vec<String>),
    #[error("{file}:{line}:{column}: {message}")]
    Parse {
        file: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{file}: unsupported schema_version {found} (supported: {supported})")]
    Version {
        file: String,
        found: u64,
        supported: u32,
    },
    #[error("{file}: {message}")]
    Rows { file: String, message: String },
    #[error(transparent)]
    Snapshot(#[from] crate::ingest::snapshot::SnapshotError),
    #[error("bundle has {} schema violation(s)", .0.len())]
    Invalid(Vec<Violation>),
}

impl LoadError {
    pub(crate) fn parse(file: &str, err: &serde_json::Error) -> Self {
        LoadError::Parse {
            file: file.to_string(),
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}

/// Case-level configuration that the coder must disclose.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("mixed-motive flows present but numerator.alpha is not disclosed")]
    AlphaMissing,
    #[error("numerator.alpha = {0} is outside [0, 1]")]
    AlphaOutOfRange(String),
    #[error("numerator.note must justify the disclosed haircut")]
    AlphaUnjustified,
    #[error("flows carry more than one currency: {}", .0.join(", "))]
    MixedCurrency(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GateError {
    #[error("route {route_id} references flow {expected} but was offered for flow {found}")]
    RouteFlowMismatch {
        route_id: String,
        expected: String,
        found: String,
    },
    #[error("route {route_id} names recipient {found}, case recipient is {expected}")]
    RecipientMismatch {
        route_id: String,
        expected: String,
        found: String,
    },
    #[error("route {route_id} references unknown flow {flow_id}")]
    DanglingRoute { route_id: String, flow_id: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoverageError {
    #[error("coverage requested before admissibility gating: {0}")]
    NotGated(String),
    #[error("denominator for {recipient}/{period} is measured but not positive")]
    NonPositiveDenominator { recipient: String, period: String },
    #[error("denominator for {recipient}/{period} has invalid bounds")]
    InvalidBounds { recipient: String, period: String },
    #[error("negative reward component {field} in window {window}")]
    NegativeComponent { window: String, field: &'static str },
    #[error("fee-share window must be at least 1 block")]
    ZeroWindow,
    #[error("window of {window} blocks exceeds the {rows} rows supplied")]
    WindowTooLarge { window: usize, rows: usize },
    #[error("block heights are not contiguous: {before} is followed by {after}")]
    HeightGap { before: u64, after: u64 },
}

/// Pipeline stages, in the only order they may run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Validated,
    Gated,
    Numerator,
    Coverage,
    Breakpoints,
    Claims,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("stage {requested:?} requires {missing:?} to have run first")]
    OutOfOrder { requested: Stage, missing: Stage },
    #[error("bundle has {} schema violation(s)", .0.len())]
    Invalid(Vec<Violation>),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Gate(#[from] GateError),
    #[error(transparent)]
    Coverage(#[from] CoverageError),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}
