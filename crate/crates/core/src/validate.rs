//! Schema and referential checks over a parsed bundle.
//!
//! Violations are data: every one carries the field path it concerns, and an
//! empty list means the bundle may enter the pipeline.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rust_decimal::Decimal;
use serde::Serialize;

use crate::model::{
    CaseBundle, DenominatorStatus, LandingLocus, UnitKind,
};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

struct Collector(Vec<Violation>);

impl Collector {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(Violation {
            path: path.into(),
            message: message.into(),
        });
    }
}

/// Identifier tokens: ASCII letters, digits and `_ . : -`.
pub fn is_token(s: &str) -> bool {
    !s.is_empty()
        && s
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | ':' | '-'))
}

pub fn validate_bundle(bundle: &CaseBundle) -> Vec<Violation> {
    let mut v = Collector(Vec::new());
    let h = &bundle.header;

    if !is_token(&h.case_id) {
        v.push("case.case_id", "must be a non-empty identifier token");
    }

    // step 1
    if !is_token(&h.unit.id) {
        v.push("case.unit.id", "must be a non-empty identifier token");
    }
    if h.unit.kind == UnitKind::Composite && h.unit.is_mixed.is_none() {
        v.push(
            "case.unit.is_mixed",
            "must be set explicitly for composite units",
        );
    }

    // step 2
    if !is_token(&h.recipient.id) {
        v.push("case.recipient.id", "must be a non-empty identifier token");
    }
    if h.recipient.unit_id != h.unit.id {
        v.push(
            "case.recipient.unit_id",
            format!("references unknown unit {:?}", h.recipient.unit_id),
        );
    }

    // periods
    let mut period_labels = BTreeSet::new();
    if h.periods.is_empty() {
        v.push("case.periods", "at least one period is required");
    }
    for (i, p) in h.periods.iter().enumerate() {
        if p.label.trim().is_empty() {
            v.push(format!("case.periods[{i}].label"), "must not be empty");
        }
        if !period_labels.insert(p.label.as_str()) {
            v.push(
                format!("case.periods[{i}].label"),
                format!("duplicate period label {:?}", p.label),
            );
        }
        if !p.is_ordered() {
            v.push(format!("case.periods[{i}]"), "start must precede end");
        }
    }
    if !period_labels.contains(h.case_period.as_str()) {
        v.push(
            "case.case_period",
            format!("references unknown period {:?}", h.case_period),
        );
    }

    if h.currency.trim().is_empty() {
        v.push("case.currency", "must not be empty");
    }
    if let Some(t) = h.b4_threshold {
        if t <= Decimal::ZERO || t > Decimal::ONE {
            v.push("case.b4_threshold", "must lie in (0, 1]");
        }
    }
    if let Some(0) = h.fee_share_window {
        v.push("case.fee_share_window", "must be at least 1");
    }
    if bundle.rows.btc_blocks.is_some() && h.fee_share_window.is_none() {
        v.push(
            "case.fee_share_window",
            "required when block rows are supplied",
        );
    }
    let mut seen_claims = BTreeSet::new();
    for (i, c) in h.claims.iter().enumerate() {
        if !seen_claims.insert(*c) {
            v.push(
                format!("case.claims[{i}]"),
                format!("duplicate claim template {}", c.key()),
            );
        }
    }

    // step 3/4: flows
    let mut flow_ids = BTreeSet::new();
    for (i, f) in bundle.flows.iter().enumerate() {
        let at = |field: &str| format!("flows[{i}].{field}");
        if !is_token(&f.id) {
            v.push(at("id"), "must be a non-empty identifier token");
        }
        if !flow_ids.insert(f.id.as_str()) {
            v.push(at("id"), format!("duplicate flow id {:?}", f.id));
        }
        if f.amount < Decimal::ZERO {
            v.push(at("amount"), "must be non-negative");
        }
        for (name, d) in [
            ("rebates", f.deductions.rebates),
            ("emissions", f.deductions.emissions),
            ("wash_self_dealing", f.deductions.wash_self_dealing),
        ] {
            if d < Decimal::ZERO {
                v.push(at(&format!("deductions.{name}")), "must be non-negative");
            }
        }
        if f.currency != h.currency {
            v.push(
                at("currency"),
                format!(
                    "{:?} differs from case currency {:?}; convert upstream and record the rate in payer_note",
                    f.currency, h.currency
                ),
            );
        }
        if !period_labels.contains(f.period_label.as_str()) {
            v.push(
                at("period_label"),
                format!("references unknown period {:?}", f.period_label),
            );
        }
        let note_missing = f
            .landing_note
            .as_deref()
            .is_none_or(|n| n.trim().is_empty());
        if f.landing == LandingLocus::Other && note_missing {
            v.push(at("landing_note"), "required when landing is \"other\"");
        }
    }

    // sources
    let mut source_ids = BTreeSet::new();
    if bundle.sources.is_empty() {
        v.push("sources", "at least one evidence source is required");
    }
    for (i, s) in bundle.sources.iter().enumerate() {
        if !is_token(&s.id) {
            v.push(
                format!("sources[{i}].id"),
                "must be a non-empty identifier token",
            );
        }
        if !source_ids.insert(s.id.as_str()) {
            v.push(
                format!("sources[{i}].id"),
                format!("duplicate source id {:?}", s.id),
            );
        }
    }

    // step 5: routes
    let mut route_ids = BTreeSet::new();
    let mut per_pair: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for (i, r) in bundle.routes.iter().enumerate() {
        let at = |field: &str| format!("routes[{i}].{field}");
        if !is_token(&r.id) {
            v.push(at("id"), "must be a non-empty identifier token");
        }
        if !route_ids.insert(r.id.as_str()) {
            v.push(at("id"), format!("duplicate route id {:?}", r.id));
        }
        if !flow_ids.contains(r.flow_id.as_str()) {
            v.push(
                at("flow_id"),
                format!("dangling reference to unknown flow {:?}", r.flow_id),
            );
        }
        if r.recipient_id != h.recipient.id {
            v.push(
                at("recipient_id"),
                format!("dangling reference to unknown recipient {:?}", r.recipient_id),
            );
        }
        if r.band_e.is_some() {
            v.push(at("band_E"), "band_E is derived-only");
        }
        for (j, sid) in r.source_ids.iter().enumerate() {
            if !source_ids.contains(sid.as_str()) {
                v.push(
                    format!("routes[{i}].source_ids[{j}]"),
                    format!("references unknown source {sid:?}"),
                );
            }
        }
        let n = per_pair
            .entry((r.flow_id.as_str(), r.recipient_id.as_str()))
            .or_default();
        *n += 1;
        if *n == 2 {
            v.push(
                at("flow_id"),
                format!(
                    "more than one route for flow {:?} and recipient {:?}",
                    r.flow_id, r.recipient_id
                ),
            );
        }
    }

    // step 7: denominators
    let mut denom_pairs = BTreeSet::new();
    for (i, d) in bundle.denominators.iter().enumerate() {
        let at = |field: &str| format!("denominators[{i}].{field}");
        if d.recipient_id != h.recipient.id {
            v.push(
                at("recipient_id"),
                format!("references unknown recipient {:?}", d.recipient_id),
            );
        }
        if !period_labels.contains(d.period_label.as_str()) {
            v.push(
                at("period_label"),
                format!("references unknown period {:?}", d.period_label),
            );
        }
        if !denom_pairs.insert((d.recipient_id.as_str(), d.period_label.as_str())) {
            v.push(
                at("period_label"),
                "more than one denominator for this recipient and period",
            );
        }
        match d.status {
            DenominatorStatus::Measured => match d.value {
                Some(x) if x > Decimal::ZERO => {}
                Some(_) => v.push(at("value"), "measured denominator must be positive"),
                None => v.push(at("value"), "required when status is measured"),
            },
            DenominatorStatus::Bounded => match (d.bound_low, d.bound_high) {
                (Some(lo), Some(hi)) => {
                    if lo <= Decimal::ZERO {
                        v.push(at("bound_low"), "must be positive");
                    }
                    if lo > hi {
                        v.push(at("bound_low"), "bound_low must not exceed bound_high");
                    }
                }
                _ => v.push(
                    at("bound_low"),
                    "bound_low and bound_high are required when status is bounded",
                ),
            },
            DenominatorStatus::Unavailable => {}
        }
        for (j, sid) in d.source_ids.iter().enumerate() {
            if !source_ids.contains(sid.as_str()) {
                v.push(
                    format!("denominators[{i}].source_ids[{j}]"),
                    format!("references unknown source {sid:?}"),
                );
            }
        }
    }

    // adapter rows can never carry G1
    for (name, grade) in [
        ("rows.btc_blocks", bundle.rows.btc_blocks.as_ref().map(|r| r.grade)),
        ("rows.eth_rewards", bundle.rows.eth_rewards.as_ref().map(|r| r.grade)),
        (
            "rows.protocol_fees",
            bundle.rows.protocol_fees.as_ref().map(|r| r.grade),
        ),
    ] {
        if grade == Some(crate::model::EvidenceGrade::G1) {
            v.push(name, "row files and adapter snapshots cannot be graded G1");
        }
    }

    let mut out = v.0;
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::case_files::parse_file_set;

    fn minimal_files() -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert(
            "case.json".into(),
            r#"{
              "schema_version": 1, "case_id": "t", "title": "t",
              "unit": {"id": "u", "kind": "chain", "boundary_note": ""},
              "recipient": {"id": "w", "unit_id": "u", "recipient_class": "miners",
                            "function_note": "", "is_specified": true},
              "periods": [{"label": "p", "basis": "block_height", "start": 1, "end": 2}],
              "case_period": "p", "currency": "BTC"
            }"#
            .into(),
        );
        m.insert(
            "flows.json".into(),
            r#"{"schema_version": 1, "flows": [
              {"id": "f1", "amount": "1", "currency": "BTC", "period_label": "p",
               "motive": "U", "landing": "protocol", "payer_note": ""}]}"#
                .into(),
        );
        m.insert(
            "routes.json".into(),
            r#"{"schema_version": 1, "routes": []}"#.into(),
        );
        m.insert(
            "sources.json".into(),
            r#"{"schema_version": 1, "sources": [
              {"id": "s1", "grade": "G1", "capture_date": "2024-01-01T00:00:00Z",
               "locator": "x", "fields_and_dates_specified": true}]}"#
                .into(),
        );
        m.insert(
            "denominators.json".into(),
            r#"{"schema_version": 1, "denominators": []}"#.into(),
        );
        m
    }

    fn with(file: &str, body: &str) -> CaseBundle {
        let mut files = minimal_files();
        files.insert(file.into(), body.into());
        parse_file_set(&files).unwrap()
    }

    #[test]
    fn minimal_bundle_is_valid() {
        let b = parse_file_set(&minimal_files()).unwrap();
        assert!(validate_bundle(&b).is_empty());
    }

    #[test]
    fn dangling_route_is_one_violation() {
        let b = with(
            "routes.json",
            r#"{"schema_version": 1, "routes": [{"id": "r1", "flow_id": "nope",
                "recipient_id": "w", "route_kind": "protocol_enforced",
                "checks": {"enforceability": "yes", "beneficiary_specificity": "yes",
                           "revocability": "no", "auditability": "yes"}}]}"#,
        );
        let v = validate_bundle(&b);
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].path, "routes[0].flow_id");
        assert!(v[0].message.contains("nope"));
    }

    #[test]
    fn hand_set_band_is_rejected() {
        let b = with(
            "routes.json",
            r#"{"schema_version": 1, "routes": [{"id": "r1", "flow_id": "f1",
                "recipient_id": "w", "route_kind": "protocol_enforced", "band_E": 1,
                "checks": {"enforceability": "yes", "beneficiary_specificity": "yes",
                           "revocability": "no", "auditability": "yes"}}]}"#,
        );
        let v = validate_bundle(&b);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].message, "band_E is derived-only");
    }

    #[test]
    fn composite_unit_needs_explicit_mix_flag() {
        let mut files = minimal_files();
        let case = files["case.json"].replace("\"chain\"", "\"composite\"");
        files.insert("case.json".into(), case);
        let v = validate_bundle(&parse_file_set(&files).unwrap());
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].path, "case.unit.is_mixed");
    }

    #[test]
    fn duplicate_routes_per_flow_are_flagged() {
        let route = r#"{"id": "ID", "flow_id": "f1", "recipient_id": "w",
            "route_kind": "voluntary_discretionary",
            "checks": {"enforceability": "no", "beneficiary_specificity": "yes",
                       "revocability": "yes", "auditability": "yes"}}"#;
        let body = format!(
            r#"{{"schema_version": 1, "routes": [{}, {}]}}"#,
            route.replace("ID", "r1"),
            route.replace("ID", "r2")
        );
        let v = validate_bundle(&with("routes.json", &body));
        assert_eq!(v.len(), 1);
        assert!(v[0].message.contains("more than one route"));
    }

    #[test]
    fn currency_and_period_references_are_checked() {
        let b = with(
            "flows.json",
            r#"{"schema_version": 1, "flows": [
              {"id": "f1", "amount": "-1", "currency": "USD", "period_label": "q",
               "motive": "U", "landing": "other", "payer_note": ""}]}"#,
        );
        let paths: Vec<String> = validate_bundle(&b).into_iter().map(|v| v.path).collect();
        assert_eq!(
            paths,
            [
                "flows[0].amount",
                "flows[0].currency",
                "flows[0].landing_note",
                "flows[0].period_label"
            ]
        );
    }

    #[test]
    fn measured_denominator_must_be_positive() {
        let b = with(
            "denominators.json",
            r#"{"schema_version": 1, "denominators": [
              {"recipient_id": "w", "period_label": "p", "status": "measured", "value": "0"}]}"#,
        );
        let v = validate_bundle(&b);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].path, "denominators[0].value");
    }
}
