//! Evidence grading and claim gates.
//!
//! Gates are nested by level: whatever blocks a mechanism claim also blocks
//! bounded-numeric and final-closure claims, and whatever blocks a bounded
//! claim also blocks a final one. Template-specific rules are layered on top.

use std::collections::BTreeSet;

use rust_decimal::Decimal;
use serde::Serialize;

use crate::admissibility::GateSet;
use crate::coverage::{Rcr, RcrBlock};
use crate::model::{
    Band, Breakpoint, BreakpointCode, CaseBundle, ClaimLevel, ClaimTemplate, Decision,
    EvidenceGrade, EvidenceSource, LandingLocus, MotiveClass, RecipientClass,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockingReason {
    UnitMixed,
    RecipientUnspecified,
    NoAcceptedRoute,
    EvidenceGradeInsufficient,
    DenominatorUnavailable,
    MotiveUnclearNarrowed,
    B3BurnConfusion,
    B4Dependence,
    SourceCoverageGap,
    RevocableRouteDowngrade,
    /// No route record with a non-zero band exists.
    NoDocumentedRoute,
    /// A null-route claim while an accepted route exists.
    AcceptedRoutePresent,
    /// A no-revenue claim while landing activity is recorded.
    LandingActivityRecorded,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClaimRequest {
    pub case_id: String,
    pub template: ClaimTemplate,
}

impl ClaimRequest {
    pub fn level(&self) -> ClaimLevel {
        self.template.level()
    }
}

/// Verdict for one template. Carries no figures by construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClaimVerdict {
    pub template: ClaimTemplate,
    pub level: ClaimLevel,
    /// False when the engine evaluated the template implicitly because a
    /// report section depends on it.
    pub requested: bool,
    pub allowed: bool,
    pub blocking_reasons: Vec<BlockingReason>,
}

/// Case sufficiency uses the best grade available, not corroboration counts.
pub fn grade_evidence(sources: &[EvidenceSource], level: ClaimLevel) -> bool {
    let has_g1 = sources.iter().any(|s| s.grade == EvidenceGrade::G1);
    match level {
        ClaimLevel::MechanismClaim => {
            has_g1 || sources.iter().any(|s| s.grade == EvidenceGrade::G2)
        }
        ClaimLevel::BoundedNumericClaim => {
            has_g1
                || sources
                    .iter()
                    .any(|s| s.grade == EvidenceGrade::G2 && s.fields_and_dates_specified)
        }
        ClaimLevel::FinalClosureClaim => has_g1,
    }
}

/// Everything the claim layer reads. Built after coverage and breakpoints.
pub struct ClaimContext<'a> {
    pub bundle: &'a CaseBundle,
    pub gates: &'a GateSet,
    pub rcr: &'a Rcr,
    pub breakpoints: &'a [Breakpoint],
}

impl ClaimContext<'_> {
    fn has_breakpoint(&self, code: BreakpointCode) -> bool {
        self.breakpoints.iter().any(|b| b.code == code)
    }

    fn accepted(&self) -> usize {
        self.gates.accepted_count()
    }

    fn any_source_blocked(&self) -> bool {
        self.gates
            .outcomes()
            .iter()
            .any(|o| o.decision == Decision::SourceBlocked)
    }

    fn motive_unclear(&self) -> bool {
        let period = &self.bundle.header.case_period;
        self.bundle
            .flows
            .iter()
            .any(|f| f.motive == MotiveClass::X && &f.period_label == period)
    }

    fn revocable_accepted_route(&self) -> bool {
        self.gates
            .outcomes()
            .iter()
            .enumerate()
            .any(|(i, o)| o.decision == Decision::Accepted && self.gates.flow_revocable(i))
    }
}

/// Blockers shared by every template at `level`.
pub fn level_blockers(level: ClaimLevel, ctx: &ClaimContext<'_>) -> BTreeSet<BlockingReason> {
    let mut out = BTreeSet::new();
    let sources = ctx.bundle.evidence_register();

    if !ctx.bundle.recipient().is_specified {
        out.insert(BlockingReason::RecipientUnspecified);
    }
    if !grade_evidence(&sources, ClaimLevel::MechanismClaim) {
        out.insert(BlockingReason::EvidenceGradeInsufficient);
    }
    if level >= ClaimLevel::BoundedNumericClaim
        && !grade_evidence(&sources, ClaimLevel::BoundedNumericClaim)
    {
        out.insert(BlockingReason::EvidenceGradeInsufficient);
    }
    if level >= ClaimLevel::FinalClosureClaim {
        if !grade_evidence(&sources, ClaimLevel::FinalClosureClaim) {
            out.insert(BlockingReason::EvidenceGradeInsufficient);
        }
        if ctx.bundle.unit().mixed() {
            out.insert(BlockingReason::UnitMixed);
        }
        if ctx.motive_unclear() {
            out.insert(BlockingReason::MotiveUnclearNarrowed);
        }
        if ctx.revocable_accepted_route() {
            out.insert(BlockingReason::RevocableRouteDowngrade);
        }
    }
    out
}

fn final_rcr_blockers(ctx: &ClaimContext<'_>) -> BTreeSet<BlockingReason> {
    let mut out = level_blockers(ClaimLevel::FinalClosureClaim, ctx);
    if ctx.accepted() == 0 {
        out.insert(BlockingReason::NoAcceptedRoute);
    }
    match ctx.rcr {
        Rcr::Point(_) => {}
        // a bounded denominator is not a measured one
        Rcr::Interval { .. } | Rcr::Blocked(RcrBlock::DenominatorUnavailable) => {
            out.insert(BlockingReason::DenominatorUnavailable);
        }
        Rcr::Blocked(RcrBlock::RecipientUnspecified) => {
            out.insert(BlockingReason::RecipientUnspecified);
        }
        Rcr::Blocked(RcrBlock::UnitMixed) => {
            out.insert(BlockingReason::UnitMixed);
        }
    }
    if ctx.any_source_blocked() {
        out.insert(BlockingReason::SourceCoverageGap);
    }
    out
}

pub fn gate_claim(request: &ClaimRequest, ctx: &ClaimContext<'_>) -> ClaimVerdict {
    use BlockingReason as B;
    use ClaimTemplate as T;

    let level = request.level();
    let mut reasons = match request.template {
        T::FinalRcr => final_rcr_blockers(ctx),
        T::HostValidatorCoverage => {
            let mut r = final_rcr_blockers(ctx);
            if ctx.bundle.recipient().recipient_class != RecipientClass::Validators {
                r.insert(B::NoAcceptedRoute);
            }
            r
        }
        _ => level_blockers(level, ctx),
    };

    match request.template {
        T::MechanismRouteExists | T::BoundedFeeShare => {
            if ctx.accepted() == 0 {
                reasons.insert(B::NoAcceptedRoute);
            }
        }
        T::RouteMechanismDocumented => {
            if !ctx.gates.bands().iter().any(|b| b.resulting_e > Band::Zero) {
                reasons.insert(B::NoDocumentedRoute);
            }
        }
        T::BoundedRouteNull => {
            if ctx.accepted() > 0 {
                reasons.insert(B::AcceptedRoutePresent);
            }
        }
        T::IssuerLevelClosure => {
            let issuer_route = ctx
                .bundle
                .flows
                .iter()
                .zip(ctx.gates.outcomes())
                .any(|(f, o)| {
                    o.decision == Decision::Accepted
                        && f.landing == LandingLocus::IssuerBalanceSheet
                });
            if !issuer_route {
                reasons.insert(B::NoAcceptedRoute);
            }
        }
        T::HistoricalRouteNull => {
            // captured-source absence is never proof of historical absence
            reasons.insert(B::SourceCoverageGap);
            if ctx.accepted() > 0 {
                reasons.insert(B::AcceptedRoutePresent);
            }
        }
        T::NoRevenue => {
            if ctx.bundle.flows.iter().any(|f| f.amount > Decimal::ZERO) {
                reasons.insert(B::LandingActivityRecorded);
            } else {
                reasons.insert(B::SourceCoverageGap);
            }
        }
        T::StableFeeReplacement | T::LongRunSecurityVerdict => {
            // no stability statistic is defined; one capture window never settles it
            reasons.insert(B::SourceCoverageGap);
            if ctx.has_breakpoint(BreakpointCode::B4) {
                reasons.insert(B::B4Dependence);
            }
        }
        T::BurnAsRewardCoverage => {
            reasons.insert(B::B3BurnConfusion);
        }
        T::FinalRcr | T::HostValidatorCoverage => {}
    }

    ClaimVerdict {
        template: request.template,
        level,
        requested: true,
        allowed: reasons.is_empty(),
        blocking_reasons: reasons.into_iter().collect(),
    }
}

/// Gates the requested templates plus the ones report sections depend on,
/// in template order.
pub fn gate_claims(requested: &[ClaimTemplate], ctx: &ClaimContext<'_>) -> Vec<ClaimVerdict> {
    let mut templates: BTreeSet<ClaimTemplate> = requested.iter().copied().collect();
    let mut implied = vec![ClaimTemplate::FinalRcr];
    if ctx.bundle.rows.btc_blocks.is_some() || ctx.bundle.rows.protocol_fees.is_some() {
        implied.push(ClaimTemplate::BoundedFeeShare);
    }
    templates.extend(implied.iter().copied());

    templates
        .into_iter()
        .map(|template| {
            let request = ClaimRequest {
                case_id: ctx.bundle.case_id().to_string(),
                template,
            };
            let mut v = gate_claim(&request, ctx);
            v.requested = requested.contains(&template);
            v
        })
        .collect()
}
