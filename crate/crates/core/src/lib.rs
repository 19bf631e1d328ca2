//! Deterministic engine for the External Value Routing Closure (EVRC) coding
//! protocol.
//!
//! A case bundle describes one analysis unit, the critical incentive recipient
//! `W` whose paid work keeps the system running, a period, the external value
//! flows observed in that period, candidate routes from landing points to `W`,
//! the evidence register, and the reward denominators.
//!
//! The engine runs the coding order strictly:
//!
//! 1. validate the bundle ([`validate`]),
//! 2. assign routing-strength bands and gate every flow ([`admissibility`]),
//! 3. compute the net external-use guardrail ([`numerator`]),
//! 4. compute route-admissible value and the routed closure ratio
//!    ([`coverage`]),
//! 5. classify breakpoints B1-B4,
//! 6. gate claim templates against evidence grades ([`claims`]),
//! 7. render a report in which blocked claims cannot carry numbers
//!    ([`report`]).
//!
//! [`pipeline::Pipeline`] enforces that ordering at runtime; the coverage
//! functions additionally take proof objects that only the earlier stages can
//! produce.

pub mod admissibility;
pub mod claims;
pub mod coverage;
pub mod decimal;
pub mod error;
pub mod exec;
pub mod ingest;
pub mod model;
pub mod numerator;
pub mod pipeline;
pub mod report;
pub mod validate;

#[cfg(feature = "testkit")]
pub mod testkit;

pub use error::{ConfigError, CoverageError, GateError, LoadError, PipelineError};
pub use exec::Strategy;
pub use model::CaseBundle;
pub use pipeline::{run_case, Pipeline};
pub use report::CaseReport;

/// Schema id carried by every rendered report.
pub const REPORT_SCHEMA: &str = "evrc-report/1";

/// Version accepted in the `schema_version` field of every input file.
pub const INPUT_SCHEMA_VERSION: u32 = 1;
