//! Case reports (`evrc-report/1`).
//!
//! Figures that a claim gate can block are held in [`Gated`] or
//! [`ReportedRcr`]. Both are built from the verdict itself, and their
//! withheld variants have no slot for a number, so a blocked claim cannot
//! travel with a value.

use std::fmt::Write as _;

use rust_decimal::Decimal;
use serde::Serialize;

use crate::admissibility::{BandRationale, GateSet};
use crate::claims::{BlockingReason, ClaimVerdict};
use crate::coverage::{EthRewardSplit, FeeShareSeries, RavFigures, Rcr};
use crate::decimal;
use crate::error::PipelineError;
use crate::model::{
    label,
    Breakpoint, CaseBundle, ClaimTemplate, Decision, DenominatorStatus,
    EvidenceGrade, EvidenceSource, FileDigest, GateOutcome, ProtocolFeeRow, RecipientClass,
    UnitKind,
};
use crate::numerator::{NetExternalValue, NumeratorBreakdown};
use crate::REPORT_SCHEMA;

/// A number with the grade of the best source behind it and its period.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Figure {
    #[serde(with = "decimal::string")]
    pub value: Decimal,
    pub grade: Option<EvidenceGrade>,
    pub period: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ReportedRcr {
    Released { value: Figure },
    Withheld { blocking_reasons: Vec<BlockingReason> },
}

impl ReportedRcr {
    fn new(verdict: &ClaimVerdict, rcr: &Rcr, grade: Option<EvidenceGrade>, period: &str) -> Self {
        match rcr {
            Rcr::Point(v) if verdict.allowed => ReportedRcr::Released {
                value: Figure {
                    value: *v,
                    grade,
                    period: period.to_string(),
                },
            },
            _ => ReportedRcr::Withheld {
                blocking_reasons: verdict.blocking_reasons.clone(),
            },
        }
    }

    pub fn is_released(&self) -> bool {
        matches!(self, ReportedRcr::Released { .. })
    }
}

/// A section released only when its claim template is allowed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Gated<T> {
    Released { template: ClaimTemplate, body: T },
    Withheld {
        template: ClaimTemplate,
        blocking_reasons: Vec<BlockingReason>,
    },
}

impl<T> Gated<T> {
    fn new(verdict: &ClaimVerdict, body: impl FnOnce() -> T) -> Self {
        if verdict.allowed {
            Gated::Released {
                template: verdict.template,
                body: body(),
            }
        } else {
            Gated::Withheld {
                template: verdict.template,
                blocking_reasons: verdict.blocking_reasons.clone(),
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UnitSection {
    pub id: String,
    pub kind: UnitKind,
    pub is_mixed: bool,
    pub pooled_capture: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RecipientSection {
    pub id: String,
    pub recipient_class: RecipientClass,
    pub is_specified: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PeriodSection {
    pub label: String,
    pub basis: &'static str,
    pub start: String,
    pub end: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NumeratorSection {
    pub value: Figure,
    #[serde(with = "decimal::opt_string")]
    pub alpha: Option<Decimal>,
    pub alpha_note: Option<String>,
    pub breakdown: NumeratorBreakdown,
    pub negative: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DenominatorSection {
    pub status: DenominatorStatus,
    pub value: Option<Figure>,
    pub bound_low: Option<Figure>,
    pub bound_high: Option<Figure>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoverageSection {
    pub recipient_id: String,
    pub period: String,
    pub accepted_flows: usize,
    pub rav_weighted: Figure,
    pub rav_unweighted: Figure,
    pub denominator: DenominatorSection,
    pub rcr: ReportedRcr,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EthRewardSection {
    pub origin: String,
    pub grade: EvidenceGrade,
    pub windows: Vec<EthRewardSplit>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FeeShareSection {
    pub origin: String,
    pub max_share: Option<Figure>,
    pub series: FeeShareSeries,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProtocolFeeSection {
    pub origin: String,
    pub coverage_gap: bool,
    pub total_fee: Figure,
    pub total_revenue: Figure,
    pub rows: Vec<ProtocolFeeRow>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Flag {
    pub code: &'static str,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CaseReport {
    pub schema: &'static str,
    pub case_id: String,
    pub title: String,
    pub unit: UnitSection,
    pub recipient: RecipientSection,
    pub period: PeriodSection,
    pub currency: String,
    #[serde(with = "decimal::string")]
    pub b4_threshold: Decimal,
    pub bands: Vec<BandRationale>,
    pub gate_outcomes: Vec<GateOutcome>,
    pub numerator: NumeratorSection,
    pub coverage: CoverageSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eth_rewards: Option<EthRewardSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fee_share: Option<Gated<FeeShareSection>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub protocol_fees: Option<Gated<ProtocolFeeSection>>,
    pub breakpoints: Vec<Breakpoint>,
    pub claims: Vec<ClaimVerdict>,
    pub flags: Vec<Flag>,
    pub provenance: Vec<FileDigest>,
}

/// Stage outputs the renderer reads.
pub struct StageOutputs<'a> {
    pub gates: &'a GateSet,
    pub numerator: &'a NetExternalValue,
    pub rav: &'a RavFigures,
    pub rcr: &'a Rcr,
    pub eth_rewards: Option<&'a [EthRewardSplit]>,
    pub fee_share: Option<&'a FeeShareSeries>,
    pub breakpoints: &'a [Breakpoint],
    pub verdicts: &'a [ClaimVerdict],
}

fn best_grade(
    register: &[EvidenceSource],
    mut keep: impl FnMut(&EvidenceSource) -> bool,
) -> Option<EvidenceGrade> {
    register.iter().filter(|s| keep(s)).map(|s| s.grade).min()
}

fn verdict(verdicts: &[ClaimVerdict], t: ClaimTemplate) -> Result<&ClaimVerdict, PipelineError> {
    verdicts
        .iter()
        .find(|v| v.template == t)
        .ok_or_else(|| PipelineError::Invariant(format!("no {} verdict was produced", t.key())))
}

pub fn render_report(bundle: &CaseBundle, out: &StageOutputs<'_>) -> Result<CaseReport, PipelineError> {
    let h = &bundle.header;
    let period = bundle
        .case_period()
        .ok_or_else(|| PipelineError::Invariant("case period does not resolve".into()))?;
    let (start, end) = period.bounds_text();
    let register = bundle.evidence_register();
    let overall = best_grade(&register, |_| true);
    let fig = |value: Decimal, grade: Option<EvidenceGrade>| Figure {
        value,
        grade,
        period: h.case_period.clone(),
    };

    // RAV is backed by the sources its accepted routes cite
    let accepted_routes: Vec<&str> = out
        .gates
        .outcomes()
        .iter()
        .filter(|o| o.decision == Decision::Accepted)
        .filter_map(|o| o.route_id.as_deref())
        .collect();
    let cited: Vec<&str> = bundle
        .routes
        .iter()
        .filter(|r| accepted_routes.contains(&r.id.as_str()))
        .flat_map(|r| r.source_ids.iter().map(String::as_str))
        .collect();
    let rav_grade = if cited.is_empty() {
        overall
    } else {
        best_grade(&register, |s| cited.contains(&s.id.as_str()))
    };

    let denom = bundle.case_denominator();
    let denom_grade = denom.and_then(|d| best_grade(&register, |s| d.source_ids.contains(&s.id)));
    let denominator = DenominatorSection {
        status: denom.map_or(DenominatorStatus::Unavailable, |d| d.status),
        value: denom.and_then(|d| d.value).map(|v| fig(v, denom_grade)),
        bound_low: denom.and_then(|d| d.bound_low).map(|v| fig(v, denom_grade)),
        bound_high: denom.and_then(|d| d.bound_high).map(|v| fig(v, denom_grade)),
    };

    let final_rcr = verdict(out.verdicts, ClaimTemplate::FinalRcr)?;
    let rcr_grade = match (rav_grade, denom_grade) {
        (Some(a), Some(b)) => Some(a.max(b)),
        _ => None,
    };
    let coverage = CoverageSection {
        recipient_id: out.rav.recipient_id().to_string(),
        period: out.rav.period_label().to_string(),
        accepted_flows: out.rav.accepted_flows(),
        rav_weighted: fig(out.rav.weighted(), rav_grade),
        rav_unweighted: fig(out.rav.unweighted(), rav_grade),
        denominator,
        rcr: ReportedRcr::new(final_rcr, out.rcr, rcr_grade, &h.case_period),
    };

    let eth_rewards = match (&bundle.rows.eth_rewards, out.eth_rewards) {
        (Some(set), Some(splits)) => Some(EthRewardSection {
            origin: set.origin.clone(),
            grade: set.grade,
            windows: splits.to_vec(),
        }),
        _ => None,
    };

    let fee_share = match (&bundle.rows.btc_blocks, out.fee_share) {
        (Some(set), Some(series)) => {
            let v = verdict(out.verdicts, ClaimTemplate::BoundedFeeShare)?;
            let span = match (set.rows.first(), set.rows.last()) {
                (Some(a), Some(b)) => format!("blocks {}..={}", a.height, b.height),
                _ => h.case_period.clone(),
            };
            Some(Gated::new(v, || FeeShareSection {
                origin: set.origin.clone(),
                max_share: series.max_share.map(|m| Figure {
                    value: m,
                    grade: Some(set.grade),
                    period: span.clone(),
                }),
                series: series.clone(),
            }))
        }
        _ => None,
    };

    let protocol_fees = match &bundle.rows.protocol_fees {
        Some(set) => {
            let v = verdict(out.verdicts, ClaimTemplate::BoundedFeeShare)?;
            let span = match (set.rows.first(), set.rows.last()) {
                (Some(a), Some(b)) => format!("{}..={}", a.period, b.period),
                _ => h.case_period.clone(),
            };
            Some(Gated::new(v, || {
                let total = |f: fn(&ProtocolFeeRow) -> Decimal| Figure {
                    value: set.rows.iter().map(f).sum(),
                    grade: Some(set.grade),
                    period: span.clone(),
                };
                ProtocolFeeSection {
                    origin: set.origin.clone(),
                    coverage_gap: set.coverage_gap,
                    total_fee: total(|r| r.fee),
                    total_revenue: total(|r| r.revenue),
                    rows: set.rows.clone(),
                }
            }))
        }
        None => None,
    };

    let mut flags = Vec::new();
    if h.pooled_capture {
        flags.push(Flag {
            code: "pooled_capture",
            message: "value is captured into a governable pool; pooling alone is not a route to the recipient".into(),
        });
    }
    if out.numerator.negative {
        flags.push(Flag {
            code: "negative_net_external_value",
            message: "deductions exceed counted external-use flows; reported unclamped".into(),
        });
    }
    if out.numerator.breakdown.deductions_on_excluded > Decimal::ZERO {
        flags.push(Flag {
            code: "deductions_on_excluded_flows",
            message: format!(
                "{} of deductions sit on excluded flows and were not netted again",
                decimal::canonical(out.numerator.breakdown.deductions_on_excluded)
            ),
        });
    }
    flags.push(Flag {
        code: "rav_uses_flow_amounts",
        message: "RAV sums per-flow accepted amounts; V_ext^net is a separate guardrail and may diverge".into(),
    });
    flags.push(Flag {
        code: "ncd_not_computed",
        message: "NCD has no definition; it is never computed and shares the FINAL_RCR verdict".into(),
    });
    if let Some(series) = out.fee_share {
        if !series.skipped.is_empty() {
            flags.push(Flag {
                code: "zero_reward_windows_skipped",
                message: format!("{} fee-share window(s) had zero total reward", series.skipped.len()),
            });
        }
    }

    let report = CaseReport {
        schema: REPORT_SCHEMA,
        case_id: h.case_id.clone(),
        title: h.title.clone(),
        unit: UnitSection {
            id: h.unit.id.clone(),
            kind: h.unit.kind,
            is_mixed: h.unit.mixed(),
            pooled_capture: h.pooled_capture,
        },
        recipient: RecipientSection {
            id: h.recipient.id.clone(),
            recipient_class: h.recipient.recipient_class,
            is_specified: h.recipient.is_specified,
        },
        period: PeriodSection {
            label: period.label.clone(),
            basis: period.basis(),
            start,
            end,
        },
        currency: h.currency.clone(),
        b4_threshold: bundle.b4_threshold(),
        bands: out.gates.bands().to_vec(),
        gate_outcomes: out.gates.outcomes().to_vec(),
        numerator: NumeratorSection {
            value: fig(out.numerator.value, overall),
            alpha: out.numerator.alpha,
            alpha_note: h.numerator.as_ref().map(|n| n.note.clone()),
            breakdown: out.numerator.breakdown.clone(),
            negative: out.numerator.negative,
        },
        coverage,
        eth_rewards,
        fee_share,
        protocol_fees,
        breakpoints: out.breakpoints.to_vec(),
        claims: out.verdicts.to_vec(),
        flags,
        provenance: bundle.provenance.clone(),
    };
    check_invariants(&report)?;
    Ok(report)
}

/// Cross-checks a finished report. A failure here is a bug, not bad input.
pub fn check_invariants(report: &CaseReport) -> Result<(), PipelineError> {
    let final_rcr = report
        .claims
        .iter()
        .find(|v| v.template == ClaimTemplate::FinalRcr)
        .ok_or_else(|| PipelineError::Invariant("FINAL_RCR verdict missing".into()))?;
    if report.coverage.rcr.is_released() && !final_rcr.allowed {
        return Err(PipelineError::Invariant(
            "numeric RCR alongside a blocked FINAL_RCR verdict".into(),
        ));
    }
    for v in &report.claims {
        if v.allowed != v.blocking_reasons.is_empty() {
            return Err(PipelineError::Invariant(format!(
                "{} verdict disagrees with its blocking reasons",
                v.template.key()
            )));
        }
    }
    if report.coverage.rav_weighted.value > report.coverage.rav_unweighted.value {
        return Err(PipelineError::Invariant(
            "weighted RAV exceeds unweighted RAV".into(),
        ));
    }
    Ok(())
}

/// Pretty JSON with a trailing newline; byte-stable for identical input.
pub fn to_json(report: &CaseReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

fn grade_text(g: Option<EvidenceGrade>) -> &'static str {
    match g {
        Some(EvidenceGrade::G1) => "G1",
        Some(EvidenceGrade::G2) => "G2",
        Some(EvidenceGrade::G3) => "G3",
        None => "ungraded",
    }
}

/// Text output rounds to this many places; JSON keeps every digit.
const TEXT_DP: u32 = 10;

fn figure_text(f: &Figure) -> String {
    format!(
        "{} [{}, {}]",
        decimal::canonical(f.value.round_dp(TEXT_DP)),
        grade_text(f.grade),
        f.period
    )
}

fn reasons_text(r: &[BlockingReason]) -> String {
    r.iter().map(label).collect::<Vec<_>>()
        .join(", ")
}

/// Plain-text rendering for analysts.
pub fn to_text(report: &CaseReport) -> String {
    let mut s = String::new();
    let w = &mut s;
    let _ = writeln!(w, "{} ({})", report.title, report.case_id);
    let _ = writeln!(w, "schema: {}", report.schema);
    let _ = writeln!(
        w,
        "unit: {} kind={} mixed={} pooled_capture={}",
        report.unit.id,
        label(&report.unit.kind), report.unit.is_mixed, report.unit.pooled_capture
    );
    let _ = writeln!(
        w,
        "recipient: {} class={} specified={}",
        report.recipient.id,
        label(&report.recipient.recipient_class), report.recipient.is_specified
    );
    let _ = writeln!(
        w,
        "period: {} ({} {} .. {})",
        report.period.label, report.period.basis, report.period.start, report.period.end
    );
    let _ = writeln!(w, "currency: {}", report.currency);
    let _ = writeln!(w, "b4 threshold: {}", decimal::canonical(report.b4_threshold));

    let _ = writeln!(w, "\nbands");
    if report.bands.is_empty() {
        let _ = writeln!(w, "  (no route records)");
    }
    for b in &report.bands {
        let rules: Vec<String> = b
            .applied_rules
            .iter()
            .map(label)
            .collect();
        let _ = writeln!(w, "  {} E={} rules={}", b.route_id, b.resulting_e, rules.join(","));
    }

    let _ = writeln!(w, "\ngate outcomes");
    for o in &report.gate_outcomes {
        let _ = writeln!(w, "  {}: {}", o.flow_id, o.narrative);
    }

    let n = &report.numerator;
    let _ = writeln!(w, "\nnet external-use value");
    let _ = writeln!(w, "  V_ext^net = {}", figure_text(&n.value));
    if let Some(a) = n.alpha {
        let _ = writeln!(w, "  alpha = {}", decimal::canonical(a));
    }
    let _ = writeln!(
        w,
        "  excluded I/S/X = {}",
        decimal::canonical(n.breakdown.excluded_total())
    );

    let c = &report.coverage;
    let _ = writeln!(w, "\ncoverage ({} / {})", c.recipient_id, c.period);
    let _ = writeln!(w, "  accepted flows: {}", c.accepted_flows);
    let _ = writeln!(w, "  RAV weighted: {}", figure_text(&c.rav_weighted));
    let _ = writeln!(w, "  RAV unweighted: {}", figure_text(&c.rav_unweighted));
    let _ = writeln!(w, "  denominator: {}", label(&c.denominator.status));
    match &c.rcr {
        ReportedRcr::Released { value } => {
            let _ = writeln!(w, "  RCR: {}", figure_text(value));
        }
        ReportedRcr::Withheld { blocking_reasons } => {
            let _ = writeln!(w, "  RCR: withheld ({})", reasons_text(blocking_reasons));
        }
    }

    if let Some(e) = &report.eth_rewards {
        let _ = writeln!(w, "\nvalidator reward split ({}, {:?})", e.origin, e.grade);
        for s in &e.windows {
            let _ = writeln!(
                w,
                "  {}: reward {} burn {}",
                s.window,
                decimal::canonical(s.validator_reward),
                decimal::canonical(s.base_fee_burn)
            );
        }
    }

    if let Some(g) = &report.fee_share {
        let _ = writeln!(w, "\nfee share");
        match g {
            Gated::Released { body, .. } => {
                let _ = writeln!(w, "  window: {} blocks ({})", body.series.window, body.origin);
                if let (Some(m), Some(start)) = (&body.max_share, body.series.max_window_start) {
                    let _ = writeln!(w, "  max share: {} from height {}", figure_text(m), start);
                }
                let _ = writeln!(w, "  windows: {}", body.series.shares.len());
            }
            Gated::Withheld { blocking_reasons, .. } => {
                let _ = writeln!(w, "  withheld ({})", reasons_text(blocking_reasons));
            }
        }
    }

    if let Some(g) = &report.protocol_fees {
        let _ = writeln!(w, "\nprotocol fees");
        match g {
            Gated::Released { body, .. } => {
                let _ = writeln!(w, "  source: {} gap={}", body.origin, body.coverage_gap);
                let _ = writeln!(w, "  fees: {}", figure_text(&body.total_fee));
                let _ = writeln!(w, "  revenue: {}", figure_text(&body.total_revenue));
            }
            Gated::Withheld { blocking_reasons, .. } => {
                let _ = writeln!(w, "  withheld ({})", reasons_text(blocking_reasons));
            }
        }
    }

    let _ = writeln!(w, "\nbreakpoints");
    if report.breakpoints.is_empty() {
        let _ = writeln!(w, "  none");
    }
    for b in &report.breakpoints {
        let _ = writeln!(w, "  {:?} {} flows={}", b.code, b.name, b.flow_ids.join(","));
    }

    let _ = writeln!(w, "\nclaims");
    for v in &report.claims {
        let status = if v.allowed { "allowed" } else { "blocked" };
        let implied = if v.requested { "" } else { " (implied)" };
        let _ = write!(w, "  {} {}{}", v.template.key(), status, implied);
        if !v.allowed {
            let _ = write!(w, ": {}", reasons_text(&v.blocking_reasons));
        }
        let _ = writeln!(w);
    }

    let _ = writeln!(w, "\nflags");
    for f in &report.flags {
        let _ = writeln!(w, "  {}: {}", f.code, f.message);
    }

    let _ = writeln!(w, "\nprovenance");
    for p in &report.provenance {
        let _ = writeln!(w, "  {} sha256:{}", p.path, p.sha256);
    }
    s
}
