//! Error to exit-status mapping.

use evrc_core::error::{CoverageError, GateError};
use evrc_core::ingest::adapters::FetchError;
use evrc_core::ingest::snapshot::SnapshotError;
use evrc_core::{LoadError, PipelineError};

pub const INPUT: u8 = 1;
pub const CONFIG: u8 = 2;
pub const NETWORK: u8 = 3;
pub const INVARIANT: u8 = 4;

pub struct Failure {
    pub status: u8,
    pub lines: Vec<String>,
}

impl Failure {
    fn new(status: u8, message: String) -> Self {
        Failure {
            status,
            lines: vec![message],
        }
    }

    pub fn input(message: String) -> Self {
        Self::new(INPUT, message)
    }

    pub fn config(message: String) -> Self {
        Self::new(CONFIG, message)
    }

    /// Keeps the status, drops the message (already printed).
    pub fn silenced(self) -> Self {
        Failure {
            status: self.status,
            lines: Vec::new(),
        }
    }

    pub fn print(&self) {
        for l in &self.lines {
            eprintln!("error: {l}");
        }
    }

    pub fn from_snapshot(e: SnapshotError) -> Self {
        let status = if e.is_integrity() { NETWORK } else { INPUT };
        Self::new(status, e.to_string())
    }

    pub fn from_load(e: LoadError) -> Self {
        match e {
            LoadError::Invalid(violations) => Failure {
                status: INPUT,
                lines: violations.iter().map(ToString::to_string).collect(),
            },
            LoadError::Snapshot(s) => Self::from_snapshot(s),
            other => Self::input(other.to_string()),
        }
    }

    pub fn from_pipeline(e: PipelineError) -> Self {
        let status = match &e {
            PipelineError::Invalid(_) => INPUT,
            PipelineError::Config(_) => CONFIG,
            PipelineError::Coverage(CoverageError::NotGated(_)) => INVARIANT,
            PipelineError::Coverage(_) => INPUT,
            // validation rules these out, so reaching one is a bug
            PipelineError::Gate(
                GateError::RouteFlowMismatch { .. }
                | GateError::RecipientMismatch { .. }
                | GateError::DanglingRoute { .. },
            ) => INVARIANT,
            PipelineError::OutOfOrder { .. } | PipelineError::Invariant(_) => INVARIANT,
        };
        match e {
            PipelineError::Invalid(v) => Failure {
                status,
                lines: v.iter().map(ToString::to_string).collect(),
            },
            other => Self::new(status, other.to_string()),
        }
    }

    pub fn from_fetch(e: FetchError) -> Self {
        match e {
            FetchError::Config(m) => Self::config(m),
            FetchError::Snapshot(s) => Self::from_snapshot(s),
            other @ (FetchError::Network { .. } | FetchError::Data(_)) => {
                let retry = if other.is_retryable() { " (retryable)" } else { "" };
                Self::new(NETWORK, format!("{other}{retry}"))
            }
        }
    }
}
