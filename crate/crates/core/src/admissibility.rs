//! Stage one: routing-strength bands, per-flow admissibility, breakpoints.
//!
//! Band table (fixed configuration, not user-tunable):
//!
//! | route kind                          | base |
//! |-------------------------------------|------|
//! | none                                | 0    |
//! | voluntary / discretionary           | 0.25 |
//! | governance-mediated                 | 0.5  |
//! | governance-mediated, escrowed/executed | 0.75 |
//! | contractual / platform rule         | 0.75 |
//! | protocol-enforced                   | 1    |
//!
//! Caps on top of the base, applied as a minimum:
//!
//! | check            | value   | cap  | rule               |
//! |------------------|---------|------|--------------------|
//! | auditability     | no      | 0.25 | `AUDIT_CAP`        |
//! | auditability     | unknown | 0.25 | `UNKNOWN_DOWNGRADE`|
//! | enforceability   | no      | 0.25 | `ENFORCE_CAP`      |
//! | enforceability   | unknown | 0.5  | `UNKNOWN_DOWNGRADE`|
//!
//! Revocability never lowers the band. A revocable route is flagged and the
//! flag narrows final-level claims instead.

use std::collections::{BTreeMap, BTreeSet};

use rust_decimal::Decimal;
use serde::Serialize;

use crate::error::GateError;
use crate::exec::{self, Strategy};
use crate::model::{
    AnalysisUnit, Band, Breakpoint, BreakpointCode, CaseBundle, CriticalRecipient, Decision,
    EvidenceSource, GateOutcome, LandingLocus, MotiveClass, ReasonCode, Route, RouteKind,
    TriState, ValueFlow,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BandRule {
    NoRoute,
    Voluntary,
    GovCap,
    GovExecuted,
    Contractual,
    Protocol,
    AuditCap,
    EnforceCap,
    UnknownDowngrade,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BandRationale {
    pub route_id: String,
    pub applied_rules: Vec<BandRule>,
    pub resulting_e: Band,
}

pub fn assign_band(route: &Route) -> (Band, BandRationale) {
    let mut rules = Vec::new();
    let base = match route.route_kind {
        RouteKind::None => {
            rules.push(BandRule::NoRoute);
            Band::Zero
        }
        RouteKind::VoluntaryDiscretionary => {
            rules.push(BandRule::Voluntary);
            Band::Quarter
        }
        RouteKind::GovernanceMediated if route.escrowed_or_executed => {
            rules.push(BandRule::GovExecuted);
            Band::ThreeQuarters
        }
        RouteKind::GovernanceMediated => {
            rules.push(BandRule::GovCap);
            Band::Half
        }
        RouteKind::ContractualPlatformRule => {
            rules.push(BandRule::Contractual);
            Band::ThreeQuarters
        }
        RouteKind::ProtocolEnforced => {
            rules.push(BandRule::Protocol);
            Band::Full
        }
    };

    let mut band = base;
    if route.route_kind != RouteKind::None {
        let checks = &route.checks;
        if checks.auditability == TriState::No {
            rules.push(BandRule::AuditCap);
            band = band.min(Band::Quarter);
        }
        if checks.enforceability == TriState::No {
            rules.push(BandRule::EnforceCap);
            band = band.min(Band::Quarter);
        }
        let mut unknown_cap = None;
        if checks.auditability == TriState::Unknown {
            unknown_cap = Some(Band::Quarter);
        }
        if checks.enforceability == TriState::Unknown {
            unknown_cap = Some(unknown_cap.map_or(Band::Half, |c: Band| c.min(Band::Half)));
        }
        if let Some(cap) = unknown_cap {
            rules.push(BandRule::UnknownDowngrade);
            band = band.min(cap);
        }
    }

    let rationale = BandRationale {
        route_id: route.id.clone(),
        applied_rules: rules,
        resulting_e: band,
    };
    (band, rationale)
}

/// A route whose band has been assigned. Only [`RatedRoute::rate`] builds
/// one, so admission can never see an unbanded route.
#[derive(Clone, Debug)]
pub struct RatedRoute<'a> {
    route: &'a Route,
    band: Band,
    rationale: BandRationale,
    source_gap: bool,
}

impl<'a> RatedRoute<'a> {
    /// Assigns the band and resolves the evidence-gap flag from the sources
    /// the route cites.
    pub fn rate(route: &'a Route, sources: &[EvidenceSource]) -> Self {
        let (band, rationale) = assign_band(route);
        let source_gap = route.source_ids.iter().any(|id| {
            sources
                .iter()
                .any(|s| &s.id == id && s.coverage_gap)
        });
        RatedRoute {
            route,
            band,
            rationale,
            source_gap,
        }
    }

    pub fn route(&self) -> &Route {
        self.route
    }

    pub fn band(&self) -> Band {
        self.band
    }

    pub fn rationale(&self) -> &BandRationale {
        &self.rationale
    }

    pub fn revocable(&self) -> bool {
        self.route.checks.revocability == TriState::Yes
    }
}

const GATES_EVALUATED_WITH_ROUTE: [ReasonCode; 7] = [
    ReasonCode::NoRoute,
    ReasonCode::BandZero,
    ReasonCode::BeneficiaryUnspecific,
    ReasonCode::MotiveExcluded,
    ReasonCode::LandingBurnMismatch,
    ReasonCode::UnitMixed,
    ReasonCode::PeriodMismatch,
];

/// Decides whether one flow enters RAV for the recipient.
pub fn admit_flow(
    flow: &ValueFlow,
    route: Option<&RatedRoute<'_>>,
    recipient: &CriticalRecipient,
    unit: &AnalysisUnit,
    case_period: &str,
) -> Result<GateOutcome, GateError> {
    let mut failed = BTreeSet::new();

    match route {
        None => {
            failed.insert(ReasonCode::NoRoute);
        }
        Some(r) => {
            let route = r.route();
            if route.flow_id != flow.id {
                return Err(GateError::RouteFlowMismatch {
                    route_id: route.id.clone(),
                    expected: route.flow_id.clone(),
                    found: flow.id.clone(),
                });
            }
            if route.recipient_id != recipient.id {
                return Err(GateError::RecipientMismatch {
                    route_id: route.id.clone(),
                    expected: recipient.id.clone(),
                    found: route.recipient_id.clone(),
                });
            }
            if r.band() == Band::Zero {
                failed.insert(ReasonCode::BandZero);
            }
            if !route.checks.beneficiary_specificity.is_yes() {
                failed.insert(ReasonCode::BeneficiaryUnspecific);
            }
        }
    }
    if !flow.motive.is_external_use() {
        failed.insert(ReasonCode::MotiveExcluded);
    }
    if flow.landing == LandingLocus::Burn {
        failed.insert(ReasonCode::LandingBurnMismatch);
    }
    if unit.mixed() {
        failed.insert(ReasonCode::UnitMixed);
    }
    if flow.period_label != case_period {
        failed.insert(ReasonCode::PeriodMismatch);
    }

    let source_blocked = route.is_some_and(|r| r.route().checks.all_unknown() && r.source_gap);
    let route_id = route.map(|r| r.route().id.clone());

    let outcome = if source_blocked {
        failed.insert(ReasonCode::EvidenceInsufficient);
        failed.insert(ReasonCode::SourceCoverageGap);
        let codes: Vec<ReasonCode> = failed.into_iter().collect();
        GateOutcome {
            narrative: format!(
                "source-blocked: route {} cannot be resolved from captured sources ({})",
                route_id.as_deref().unwrap_or("-"),
                join_codes(&codes)
            ),
            flow_id: flow.id.clone(),
            route_id,
            decision: Decision::SourceBlocked,
            reason_codes: codes,
        }
    } else if failed.is_empty() {
        let r = route.expect("accepted flows always have a route");
        GateOutcome {
            narrative: format!(
                "accepted at E={} via {} route {}; all gates passed",
                r.band(),
                kind_name(r.route().route_kind),
                r.route().id
            ),
            flow_id: flow.id.clone(),
            route_id,
            decision: Decision::Accepted,
            reason_codes: GATES_EVALUATED_WITH_ROUTE.to_vec(),
        }
    } else {
        let codes: Vec<ReasonCode> = failed.into_iter().collect();
        GateOutcome {
            narrative: format!("rejected: {}", join_codes(&codes)),
            flow_id: flow.id.clone(),
            route_id,
            decision: Decision::Rejected,
            reason_codes: codes,
        }
    };
    Ok(outcome)
}

fn join_codes(codes: &[ReasonCode]) -> String {
    codes
        .iter()
        .map(|c| c.as_str())
        .collect::<Vec<_>>()
        .join(", ")
}

fn kind_name(kind: RouteKind) -> &'static str {
    match kind {
        RouteKind::None => "none",
        RouteKind::VoluntaryDiscretionary => "voluntary_discretionary",
        RouteKind::GovernanceMediated => "governance_mediated",
        RouteKind::ContractualPlatformRule => "contractual_platform_rule",
        RouteKind::ProtocolEnforced => "protocol_enforced",
    }
}

/// Output of stage one for a whole bundle. Only [`gate_case`] produces it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GateSet {
    outcomes: Vec<GateOutcome>,
    bands: Vec<BandRationale>,
    flow_bands: Vec<Option<Band>>,
    flow_revocable: Vec<bool>,
}

impl GateSet {
    /// One outcome per flow, in bundle order.
    pub fn outcomes(&self) -> &[GateOutcome] {
        &self.outcomes
    }

    /// One rationale per route, in bundle order.
    pub fn bands(&self) -> &[BandRationale] {
        &self.bands
    }

    /// Band of the route attached to the flow at `index`, if any.
    pub fn flow_band(&self, index: usize) -> Option<Band> {
        self.flow_bands.get(index).copied().flatten()
    }

    pub fn flow_revocable(&self, index: usize) -> bool {
        self.flow_revocable.get(index).copied().unwrap_or(false)
    }

    pub fn accepted_count(&self) -> usize {
        self.outcomes
            .iter()
            .filter(|o| o.decision == Decision::Accepted)
            .count()
    }

    /// True when this gate set was produced for exactly these flows.
    pub fn covers(&self, bundle: &CaseBundle) -> bool {
        self.outcomes.len() == bundle.flows.len()
            && self
                .outcomes
                .iter()
                .zip(&bundle.flows)
                .all(|(o, f)| o.flow_id == f.id)
    }
}

/// Runs band assignment and admission for every flow of a validated bundle.
pub fn gate_case(bundle: &CaseBundle, strategy: Strategy) -> Result<GateSet, GateError> {
    let register = bundle.evidence_register();
    let rated: Vec<RatedRoute<'_>> = bundle
        .routes
        .iter()
        .map(|r| RatedRoute::rate(r, &register))
        .collect();

    let flow_ids: BTreeSet<&str> = bundle.flows.iter().map(|f| f.id.as_str()).collect();
    for r in &bundle.routes {
        if !flow_ids.contains(r.flow_id.as_str()) {
            return Err(GateError::DanglingRoute {
                route_id: r.id.clone(),
                flow_id: r.flow_id.clone(),
            });
        }
    }
    let by_flow: BTreeMap<&str, &RatedRoute<'_>> = rated
        .iter()
        .map(|r| (r.route().flow_id.as_str(), r))
        .collect();

    let recipient = bundle.recipient();
    let unit = bundle.unit();
    let case_period = bundle.header.case_period.as_str();

    let results = exec::map_ordered(&bundle.flows, strategy, |flow| {
        let route = by_flow.get(flow.id.as_str()).copied();
        admit_flow(flow, route, recipient, unit, case_period)
            .map(|o| (o, route.map(|r| r.band()), route.is_some_and(|r| r.revocable())))
    });

    let mut outcomes = Vec::with_capacity(results.len());
    let mut flow_bands = Vec::with_capacity(results.len());
    let mut flow_revocable = Vec::with_capacity(results.len());
    for r in results {
        let (o, b, rev) = r?;
        outcomes.push(o);
        flow_bands.push(b);
        flow_revocable.push(rev);
    }

    Ok(GateSet {
        outcomes,
        bands: rated.iter().map(|r| r.rationale().clone()).collect(),
        flow_bands,
        flow_revocable,
    })
}

/// True when the flow reaches W through some recorded route in the case
/// period, whether or not it was admitted. Burned value never pays W.
fn pays_recipient(bundle: &CaseBundle, flow: &ValueFlow) -> bool {
    flow.landing != LandingLocus::Burn
        && flow.period_label == bundle.header.case_period
        && bundle
            .routes
            .iter()
            .any(|r| r.flow_id == flow.id && r.route_kind != RouteKind::None)
}

fn breakpoint(code: BreakpointCode, hits: &[(usize, &ValueFlow)], gates: &GateSet) -> Breakpoint {
    let mut codes = BTreeSet::new();
    for (i, _) in hits {
        if let Some(o) = gates.outcomes.get(*i) {
            if o.decision != Decision::Accepted {
                codes.extend(o.reason_codes.iter().copied());
            }
        }
    }
    Breakpoint {
        code,
        name: code.name(),
        flow_ids: hits.iter().map(|(_, f)| f.id.clone()).collect(),
        justification: codes.into_iter().collect(),
    }
}

/// Codes B1-B4 from the gated flows. `gates` must come from this bundle.
pub fn classify_breakpoints(bundle: &CaseBundle, gates: &GateSet) -> Vec<Breakpoint> {
    let decision = |i: usize| gates.outcomes.get(i).map(|o| o.decision);
    let indexed: Vec<(usize, &ValueFlow)> = bundle.flows.iter().enumerate().collect();
    let mut found = Vec::new();

    let b1: Vec<_> = indexed
        .iter()
        .copied()
        .filter(|(_, f)| {
            matches!(f.motive, MotiveClass::I | MotiveClass::S) && f.intended_numerator
        })
        .collect();
    if !b1.is_empty() {
        found.push(breakpoint(BreakpointCode::B1, &b1, gates));
    }

    let issuance_loop = bundle
        .flows
        .iter()
        .any(|f| f.landing == LandingLocus::NewIssuance && pays_recipient(bundle, f));
    let b2: Vec<_> = indexed
        .iter()
        .copied()
        .filter(|(i, f)| f.landing == LandingLocus::App && decision(*i) != Some(Decision::Accepted))
        .collect();
    if issuance_loop && !b2.is_empty() {
        found.push(breakpoint(BreakpointCode::B2, &b2, gates));
    }

    let routed: BTreeSet<&str> = bundle.routes.iter().map(|r| r.flow_id.as_str()).collect();
    let b3: Vec<_> = indexed
        .iter()
        .copied()
        .filter(|(_, f)| {
            f.landing == LandingLocus::Burn
                && (f.intended_numerator || routed.contains(f.id.as_str()))
        })
        .collect();
    if !b3.is_empty() {
        found.push(breakpoint(BreakpointCode::B3, &b3, gates));
    }

    let payments: Vec<_> = indexed
        .iter()
        .copied()
        .filter(|(_, f)| pays_recipient(bundle, f))
        .collect();
    if !payments.is_empty() {
        let inflow: Decimal = payments.iter().map(|(_, f)| f.amount).sum();
        let accepted: Decimal = payments
            .iter()
            .filter(|(i, _)| decision(*i) == Some(Decision::Accepted))
            .map(|(_, f)| f.amount)
            .sum();
        let all_issuance = payments
            .iter()
            .all(|(_, f)| f.landing == LandingLocus::NewIssuance);
        let below = inflow > Decimal::ZERO && accepted / inflow < bundle.b4_threshold();
        if all_issuance || below {
            let hits: Vec<_> = payments
                .iter()
                .copied()
                .filter(|(i, _)| decision(*i) != Some(Decision::Accepted))
                .collect();
            found.push(breakpoint(BreakpointCode::B4, &hits, gates));
        }
    }

    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RouteChecks;
    use TriState::{No, Unknown, Yes};

    fn route(kind: RouteKind, checks: [TriState; 4], escrowed: bool) -> Route {
        Route {
            id: "r".into(),
            flow_id: "f".into(),
            recipient_id: "w".into(),
            route_kind: kind,
            checks: RouteChecks {
                enforceability: checks[0],
                beneficiary_specificity: checks[1],
                revocability: checks[2],
                auditability: checks[3],
            },
            escrowed_or_executed: escrowed,
            source_ids: vec![],
            note: None,
            band_e: None,
        }
    }

    #[test]
    fn protocol_route_with_clean_checks_is_full_band() {
        let (b, why) = assign_band(&route(RouteKind::ProtocolEnforced, [Yes, Yes, No, Yes], false));
        assert_eq!(b, Band::Full);
        assert_eq!(why.applied_rules, [BandRule::Protocol]);
    }

    #[test]
    fn governance_route_is_capped_until_executed() {
        let (b, why) = assign_band(&route(RouteKind::GovernanceMediated, [Yes, Yes, Yes, Yes], false));
        assert_eq!(b, Band::Half);
        assert_eq!(why.applied_rules, [BandRule::GovCap]);
        let (b, _) = assign_band(&route(RouteKind::GovernanceMediated, [Yes, Yes, Yes, Yes], true));
        assert_eq!(b, Band::ThreeQuarters);
    }

    #[test]
    fn unknown_auditability_downgrades_contractual_route() {
        // hand table: base 0.75, auditability unknown caps at 0.25
        let (b, why) = assign_band(&route(
            RouteKind::ContractualPlatformRule,
            [Yes, Yes, No, Unknown],
            false,
        ));
        assert_eq!(b, Band::Quarter);
        assert_eq!(
            why.applied_rules,
            [BandRule::Contractual, BandRule::UnknownDowngrade]
        );
    }

    #[test]
    fn unknown_enforceability_caps_at_half() {
        let (b, _) = assign_band(&route(RouteKind::ProtocolEnforced, [Unknown, Yes, No, Yes], false));
        assert_eq!(b, Band::Half);
        let (b, why) = assign_band(&route(RouteKind::ProtocolEnforced, [No, Yes, No, No], false));
        assert_eq!(b, Band::Quarter);
        assert_eq!(
            why.applied_rules,
            [BandRule::Protocol, BandRule::AuditCap, BandRule::EnforceCap]
        );
    }

    #[test]
    fn revocability_never_lowers_the_band() {
        let (a, _) = assign_band(&route(RouteKind::ProtocolEnforced, [Yes, Yes, Yes, Yes], false));
        let (b, _) = assign_band(&route(RouteKind::ProtocolEnforced, [Yes, Yes, No, Yes], false));
        assert_eq!(a, b);
    }

    #[test]
    fn none_route_is_zero_regardless_of_checks() {
        for c in TriState::ALL {
            let (b, why) = assign_band(&route(RouteKind::None, [c; 4], true));
            assert_eq!(b, Band::Zero);
            assert_eq!(why.applied_rules, [BandRule::NoRoute]);
        }
    }

    fn flow(motive: MotiveClass, landing: LandingLocus) -> ValueFlow {
        ValueFlow {
            id: "f".into(),
            amount: Decimal::from(100),
            currency: "USD".into(),
            period_label: "p".into(),
            motive,
            landing,
            landing_note: None,
            payer_note: String::new(),
            deductions: Default::default(),
            intended_numerator: false,
        }
    }

    fn recipient() -> CriticalRecipient {
        CriticalRecipient {
            id: "w".into(),
            unit_id: "u".into(),
            recipient_class: crate::model::RecipientClass::Miners,
            function_note: String::new(),
            is_specified: true,
        }
    }

    fn unit(mixed: Option<bool>) -> AnalysisUnit {
        AnalysisUnit {
            id: "u".into(),
            kind: crate::model::UnitKind::Chain,
            boundary_note: String::new(),
            is_mixed: mixed,
        }
    }

    #[test]
    fn fee_flow_on_protocol_route_is_accepted() {
        let r = route(RouteKind::ProtocolEnforced, [Yes, Yes, No, Yes], false);
        let rated = RatedRoute::rate(&r, &[]);
        let o = admit_flow(
            &flow(MotiveClass::U, LandingLocus::Protocol),
            Some(&rated),
            &recipient(),
            &unit(None),
            "p",
        )
        .unwrap();
        assert_eq!(o.decision, Decision::Accepted);
        assert!(!o.reason_codes.is_empty());
    }

    #[test]
    fn app_landing_without_route_is_rejected_for_no_route_only() {
        let o = admit_flow(
            &flow(MotiveClass::U, LandingLocus::App),
            None,
            &recipient(),
            &unit(Some(false)),
            "p",
        )
        .unwrap();
        assert_eq!(o.decision, Decision::Rejected);
        assert_eq!(o.reason_codes, [ReasonCode::NoRoute]);
    }

    #[test]
    fn burn_landing_is_rejected_even_with_a_route() {
        let r = route(RouteKind::ProtocolEnforced, [Yes, Yes, No, Yes], false);
        let rated = RatedRoute::rate(&r, &[]);
        let o = admit_flow(
            &flow(MotiveClass::U, LandingLocus::Burn),
            Some(&rated),
            &recipient(),
            &unit(None),
            "p",
        )
        .unwrap();
        assert_eq!(o.decision, Decision::Rejected);
        assert_eq!(o.reason_codes, [ReasonCode::LandingBurnMismatch]);
    }

    #[test]
    fn every_failed_condition_is_listed() {
        let r = route(RouteKind::None, [No, No, Yes, No], false);
        let rated = RatedRoute::rate(&r, &[]);
        let mut f = flow(MotiveClass::X, LandingLocus::Burn);
        f.period_label = "other".into();
        let o = admit_flow(&f, Some(&rated), &recipient(), &unit(Some(true)), "p").unwrap();
        assert_eq!(
            o.reason_codes,
            [
                ReasonCode::BandZero,
                ReasonCode::BeneficiaryUnspecific,
                ReasonCode::MotiveExcluded,
                ReasonCode::LandingBurnMismatch,
                ReasonCode::UnitMixed,
                ReasonCode::PeriodMismatch,
            ]
        );
    }

    #[test]
    fn unresolvable_route_with_gap_source_is_source_blocked() {
        let mut r = route(RouteKind::ProtocolEnforced, [Unknown; 4], false);
        r.source_ids = vec!["s".into()];
        let gap_source = EvidenceSource {
            id: "s".into(),
            grade: crate::model::EvidenceGrade::G2,
            capture_date: chrono::DateTime::UNIX_EPOCH,
            locator: String::new(),
            fields_and_dates_specified: false,
            coverage_gap: true,
            note: None,
        };
        let rated = RatedRoute::rate(&r, std::slice::from_ref(&gap_source));
        let o = admit_flow(
            &flow(MotiveClass::U, LandingLocus::Protocol),
            Some(&rated),
            &recipient(),
            &unit(None),
            "p",
        )
        .unwrap();
        assert_eq!(o.decision, Decision::SourceBlocked);
        assert!(o.reason_codes.contains(&ReasonCode::SourceCoverageGap));

        // same route without the gap flag is merely rejected
        let mut closed = gap_source;
        closed.coverage_gap = false;
        let rated = RatedRoute::rate(&r, &[closed]);
        let o = admit_flow(
            &flow(MotiveClass::U, LandingLocus::Protocol),
            Some(&rated),
            &recipient(),
            &unit(None),
            "p",
        )
        .unwrap();
        assert_eq!(o.decision, Decision::Rejected);
    }

    #[test]
    fn route_for_another_recipient_is_a_hard_error() {
        let mut r = route(RouteKind::ProtocolEnforced, [Yes, Yes, No, Yes], false);
        r.recipient_id = "someone-else".into();
        let rated = RatedRoute::rate(&r, &[]);
        let err = admit_flow(
            &flow(MotiveClass::U, LandingLocus::Protocol),
            Some(&rated),
            &recipient(),
            &unit(None),
            "p",
        )
        .unwrap_err();
        assert!(matches!(err, GateError::RecipientMismatch { .. }));
    }
}
