//! Seeded generators for property tests, the acceptance suite and benches.
//! Every bundle produced here passes [`crate::validate::validate_bundle`].

use chrono::{DateTime, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rust_decimal::Decimal;

use crate::model::*;

pub use rand::SeedableRng;
pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Non-negative amount with up to two decimals.
pub fn amount(rng: &mut TestRng, max_units: i64) -> Decimal {
    Decimal::new(rng.gen_range(0..=max_units * 100), 2)
}

pub fn tri(rng: &mut TestRng) -> TriState {
    *TriState::ALL.choose(rng).expect("non-empty")
}

pub fn checks(rng: &mut TestRng) -> RouteChecks {
    RouteChecks {
        enforceability: tri(rng),
        beneficiary_specificity: tri(rng),
        revocability: tri(rng),
        auditability: tri(rng),
    }
}

pub fn route(rng: &mut TestRng, id: &str, flow_id: &str, recipient_id: &str) -> Route {
    Route {
        id: id.to_string(),
        flow_id: flow_id.to_string(),
        recipient_id: recipient_id.to_string(),
        route_kind: *RouteKind::ALL.choose(rng).expect("non-empty"),
        checks: checks(rng),
        escrowed_or_executed: rng.gen_bool(0.3),
        source_ids: Vec::new(),
        note: None,
        band_e: None,
    }
}

pub fn flow(rng: &mut TestRng, id: &str, period: &str) -> ValueFlow {
    let landing = *LandingLocus::ALL.choose(rng).expect("non-empty");
    let small = |rng: &mut TestRng| {
        if rng.gen_bool(0.3) {
            amount(rng, 50)
        } else {
            Decimal::ZERO
        }
    };
    ValueFlow {
        id: id.to_string(),
        amount: amount(rng, 10_000),
        currency: "USD".into(),
        period_label: period.to_string(),
        motive: *MotiveClass::ALL.choose(rng).expect("non-empty"),
        landing,
        landing_note: (landing == LandingLocus::Other).then(|| "generated".to_string()),
        payer_note: String::new(),
        deductions: Deductions {
            rebates: small(rng),
            emissions: small(rng),
            wash_self_dealing: small(rng),
        },
        intended_numerator: rng.gen_bool(0.3),
    }
}

pub fn flows(rng: &mut TestRng, n: usize) -> Vec<ValueFlow> {
    (0..n).map(|i| flow(rng, &format!("f{i}"), "t")).collect()
}

fn instant(day: u32) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 1, day, 0, 0, 0)
        .single()
        .expect("valid date")
}

pub fn source(rng: &mut TestRng, id: &str) -> EvidenceSource {
    EvidenceSource {
        id: id.to_string(),
        grade: *[EvidenceGrade::G1, EvidenceGrade::G2, EvidenceGrade::G3]
            .choose(rng)
            .expect("non-empty"),
        capture_date: instant(rng.gen_range(1..=28)),
        locator: format!("generated:{id}"),
        fields_and_dates_specified: rng.gen_bool(0.5),
        coverage_gap: rng.gen_bool(0.2),
        note: None,
    }
}

pub fn denominator(rng: &mut TestRng, recipient_id: &str) -> Option<RewardDenominator> {
    let mut d = RewardDenominator {
        recipient_id: recipient_id.to_string(),
        period_label: "t".into(),
        status: DenominatorStatus::Unavailable,
        value: None,
        bound_low: None,
        bound_high: None,
        source_ids: Vec::new(),
    };
    match rng.gen_range(0..4) {
        0 => return None,
        1 => {}
        2 => {
            d.status = DenominatorStatus::Measured;
            d.value = Some(amount(rng, 50_000) + Decimal::ONE);
        }
        _ => {
            let lo = amount(rng, 20_000) + Decimal::ONE;
            d.status = DenominatorStatus::Bounded;
            d.bound_low = Some(lo);
            d.bound_high = Some(lo + amount(rng, 20_000));
        }
    }
    Some(d)
}

/// A valid bundle with up to `max_flows` flows.
pub fn bundle(rng: &mut TestRng, max_flows: usize) -> CaseBundle {
    let kinds = [
        UnitKind::Protocol,
        UnitKind::App,
        UnitKind::Company,
        UnitKind::Issuer,
        UnitKind::Chain,
        UnitKind::Dao,
        UnitKind::Composite,
    ];
    let classes = [
        RecipientClass::AuthorsCurators,
        RecipientClass::Miners,
        RecipientClass::Validators,
        RecipientClass::SuppliersRiskLayers,
        RecipientClass::StorageProviders,
        RecipientClass::IssuerOperators,
        RecipientClass::Other,
    ];
    let unit = AnalysisUnit {
        id: "u".into(),
        kind: *kinds.choose(rng).expect("non-empty"),
        boundary_note: String::new(),
        is_mixed: Some(rng.gen_bool(0.15)),
    };
    let recipient = CriticalRecipient {
        id: "w".into(),
        unit_id: "u".into(),
        recipient_class: *classes.choose(rng).expect("non-empty"),
        function_note: String::new(),
        is_specified: rng.gen_bool(0.85),
    };

    let n_sources = rng.gen_range(1..=3);
    let sources: Vec<EvidenceSource> = (0..n_sources)
        .map(|i| source(rng, &format!("s{i}")))
        .collect();

    let n = rng.gen_range(0..=max_flows);
    let mut fs = Vec::with_capacity(n);
    let mut routes = Vec::new();
    for i in 0..n {
        let period = if rng.gen_bool(0.9) { "t" } else { "t-1" };
        let f = flow(rng, &format!("f{i}"), period);
        if rng.gen_bool(0.7) {
            let mut r = route(rng, &format!("r{i}"), &f.id, "w");
            for s in &sources {
                if rng.gen_bool(0.5) {
                    r.source_ids.push(s.id.clone());
                }
            }
            routes.push(r);
        }
        fs.push(f);
    }

    let alpha = Decimal::new(rng.gen_range(0..=100), 2);
    let mut claims: Vec<ClaimTemplate> = ClaimTemplate::ALL
        .iter()
        .copied()
        .filter(|_| rng.gen_bool(0.4))
        .collect();
    claims.sort();

    let header = CaseHeader {
        schema_version: crate::INPUT_SCHEMA_VERSION,
        case_id: "generated".into(),
        title: "generated bundle".into(),
        unit,
        recipient,
        periods: vec![
            Period {
                label: "t-1".into(),
                span: PeriodSpan::WallClock {
                    start: instant(1),
                    end: instant(15),
                },
            },
            Period {
                label: "t".into(),
                span: PeriodSpan::WallClock {
                    start: instant(15),
                    end: instant(29),
                },
            },
        ],
        case_period: "t".into(),
        currency: "USD".into(),
        numerator: Some(NumeratorConfig {
            alpha: Some(alpha),
            note: "generated haircut".into(),
        }),
        b4_threshold: rng
            .gen_bool(0.3)
            .then(|| Decimal::new(rng.gen_range(1..=100), 2)),
        pooled_capture: rng.gen_bool(0.2),
        fee_share_window: None,
        claims,
    };

    CaseBundle {
        header,
        flows: fs,
        routes,
        sources,
        denominators: denominator(rng, "w").into_iter().collect(),
        rows: CaseRows::default(),
        provenance: Vec::new(),
    }
}

pub fn eth_row(rng: &mut TestRng, window: &str) -> EthRewardRow {
    EthRewardRow {
        window: window.to_string(),
        priority_fees_to_proposer: amount(rng, 1_000),
        proposer_mev: amount(rng, 1_000),
        consensus_issuance: amount(rng, 5_000),
        penalties_slashing: amount(rng, 10),
        base_fee_burn: amount(rng, 5_000),
    }
}

/// Contiguous block rows starting at `start`.
pub fn btc_rows(rng: &mut TestRng, start: u64, n: usize) -> Vec<BtcBlockRow> {
    (0..n as u64)
        .map(|i| BtcBlockRow {
            height: start + i,
            fees: Decimal::new(rng.gen_range(0..=100_000_000), 8),
            subsidy: Decimal::new(312_500_000, 8),
        })
        .collect()
}
