use proptest::prelude::*;
use rust_decimal::Decimal;

use evrc_core::admissibility::{assign_band, gate_case};
use evrc_core::claims::{level_blockers, ClaimContext};
use evrc_core::coverage::{btc_fee_share, compute_rav, compute_rcr};
use evrc_core::ingest::{parse_file_set, to_file_set};
use evrc_core::model::*;
use evrc_core::numerator::net_external_value;
use evrc_core::testkit;
use evrc_core::validate::validate_bundle;
use evrc_core::{run_case, Strategy as Exec};

fn tri() -> impl Strategy<Value = TriState> {
    prop::sample::select(TriState::ALL.to_vec())
}

fn kind() -> impl Strategy<Value = RouteKind> {
    prop::sample::select(RouteKind::ALL.to_vec())
}

fn route(kind: RouteKind, c: [TriState; 4], escrowed: bool) -> Route {
    Route {
        id: "r".into(),
        flow_id: "f".into(),
        recipient_id: "w".into(),
        route_kind: kind,
        checks: RouteChecks {
            enforceability: c[0],
            beneficiary_specificity: c[1],
            revocability: c[2],
            auditability: c[3],
        },
        escrowed_or_executed: escrowed,
        source_ids: vec![],
        note: None,
        band_e: None,
    }
}

/// No < Unknown < Yes, for checks where yes is the stronger answer.
fn strength(t: TriState) -> u8 {
    match t {
        TriState::No => 0,
        TriState::Unknown => 1,
        TriState::Yes => 2,
    }
}

fn kind_rank(k: RouteKind) -> u8 {
    RouteKind::ALL.iter().position(|x| *x == k).unwrap() as u8
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn governance_routes_stay_capped_unless_executed(
        c in prop::array::uniform4(tri()),
    ) {
        let (band, _) = assign_band(&route(RouteKind::GovernanceMediated, c, false));
        prop_assert!(band <= Band::Half);
    }

    #[test]
    fn stronger_routes_never_band_lower(
        k1 in kind(), k2 in kind(),
        a in prop::array::uniform4(tri()), b in prop::array::uniform4(tri()),
        e1 in any::<bool>(), e2 in any::<bool>(),
    ) {
        let r1 = route(k1, a, e1);
        // enforceability and auditability are the checks that can raise a band
        let up = |x: TriState, y: TriState| if strength(y) > strength(x) { y } else { x };
        let k = if kind_rank(k2) > kind_rank(k1) { k2 } else { k1 };
        let r2 = route(k, [up(a[0], b[0]), b[1], b[2], up(a[3], b[3])], e1 || e2);
        prop_assert!(assign_band(&r2).0 >= assign_band(&r1).0);
    }

    #[test]
    fn rav_weighted_never_exceeds_unweighted(seed in any::<u64>()) {
        let bundle = testkit::bundle(&mut testkit::rng(seed), 12);
        let gates = gate_case(&bundle, Exec::Sequential).unwrap();
        let rav = compute_rav(&bundle, &gates).unwrap();
        prop_assert!(rav.weighted() >= Decimal::ZERO);
        prop_assert!(rav.weighted() <= rav.unweighted());
        prop_assert_eq!(rav.accepted_flows(), gates.accepted_count());
    }

    #[test]
    fn gating_strategies_agree(seed in any::<u64>()) {
        let bundle = testkit::bundle(&mut testkit::rng(seed), 40);
        prop_assert_eq!(
            gate_case(&bundle, Exec::Sequential).unwrap(),
            gate_case(&bundle, Exec::Parallel).unwrap()
        );
    }

    #[test]
    fn closure_claims_imply_weaker_levels(seed in any::<u64>()) {
        let bundle = testkit::bundle(&mut testkit::rng(seed), 8);
        let gates = gate_case(&bundle, Exec::Sequential).unwrap();
        let rav = compute_rav(&bundle, &gates).unwrap();
        let rcr = compute_rcr(&rav, bundle.case_denominator(), bundle.recipient(), bundle.unit()).unwrap();
        let breakpoints = evrc_core::admissibility::classify_breakpoints(&bundle, &gates);
        let ctx = ClaimContext { bundle: &bundle, gates: &gates, rcr: &rcr, breakpoints: &breakpoints };
        let blockers: Vec<_> = ClaimLevel::ALL.iter().map(|l| level_blockers(*l, &ctx)).collect();
        prop_assert!(blockers[0].is_subset(&blockers[1]));
        prop_assert!(blockers[1].is_subset(&blockers[2]));

        let (report, _) = run_case(&bundle, Exec::Sequential).unwrap();
        let final_allowed = report
            .claims
            .iter()
            .any(|v| v.allowed && v.level == ClaimLevel::FinalClosureClaim);
        if final_allowed {
            prop_assert!(blockers[0].is_empty() && blockers[1].is_empty());
        }
    }

    #[test]
    fn file_sets_round_trip(seed in any::<u64>()) {
        let mut bundle = testkit::bundle(&mut testkit::rng(seed), 6);
        let mut rng = testkit::rng(seed ^ 0x5eed);
        bundle.rows.eth_rewards = Some(RowSet {
            rows: (0..3).map(|i| testkit::eth_row(&mut rng, &format!("d{i}"))).collect(),
            origin: "rows/eth_rewards.csv".into(),
            grade: EvidenceGrade::G2,
            fields_and_dates_specified: true,
            coverage_gap: false,
        });
        let files = to_file_set(&bundle);
        let mut back = parse_file_set(&files).unwrap();
        prop_assert!(!back.provenance.is_empty());
        back.provenance.clear();
        prop_assert_eq!(back, bundle);
    }

    #[test]
    fn alpha_endpoints_and_monotonicity(seed in any::<u64>(), a in 0u32..=100, b in 0u32..=100) {
        let flows = testkit::flows(&mut testkit::rng(seed), 12);
        let at = |alpha: Decimal| {
            net_external_value(&flows, Some(&NumeratorConfig { alpha: Some(alpha), note: "t".into() }))
                .unwrap()
                .value
        };
        let sum = |pred: &dyn Fn(&ValueFlow) -> bool| -> Decimal {
            flows.iter().filter(|f| pred(f)).map(|f| f.amount).sum()
        };
        let counted = |f: &ValueFlow| matches!(f.motive, MotiveClass::U | MotiveClass::F | MotiveClass::M);
        let deductions: Decimal = flows.iter().filter(|f| counted(f)).map(|f| f.deductions.total()).sum();
        let uf = sum(&|f| matches!(f.motive, MotiveClass::U | MotiveClass::F));
        let m = sum(&|f| f.motive == MotiveClass::M);

        prop_assert_eq!(at(Decimal::ZERO), uf - deductions);
        prop_assert_eq!(at(Decimal::ONE), uf + m - deductions);
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(at(Decimal::new(lo.into(), 2)) <= at(Decimal::new(hi.into(), 2)));
    }

    #[test]
    fn excluded_motives_never_move_the_numerator(seed in any::<u64>(), copies in 1usize..4) {
        let mut rng = testkit::rng(seed);
        let flows = testkit::flows(&mut rng, 10);
        let cfg = NumeratorConfig { alpha: Some(Decimal::new(5, 1)), note: "t".into() };
        let base = net_external_value(&flows, Some(&cfg)).unwrap().value;

        let mut grown = flows.clone();
        for f in flows.iter().filter(|f| !f.motive.is_external_use()) {
            for _ in 0..copies {
                grown.push(f.clone());
            }
        }
        let mut extra = testkit::flow(&mut rng, "extra", "t");
        extra.motive = MotiveClass::I;
        extra.amount = Decimal::from(1_000_000);
        grown.push(extra);
        grown.reverse();
        prop_assert_eq!(net_external_value(&grown, Some(&cfg)).unwrap().value, base);
    }

    #[test]
    fn full_window_is_the_global_ratio(seed in any::<u64>(), n in 1usize..200) {
        let rows = testkit::btc_rows(&mut testkit::rng(seed), 800_000, n);
        let fees: Decimal = rows.iter().map(|r| r.fees).sum();
        let total: Decimal = rows.iter().map(|r| r.fees + r.subsidy).sum();
        let s = btc_fee_share(&rows, n).unwrap();
        prop_assert_eq!(s.shares.len(), 1);
        prop_assert_eq!(s.max_share, Some(fees / total));

        let w = 1 + (seed as usize % n);
        let s = btc_fee_share(&rows, w).unwrap();
        prop_assert_eq!(s.shares.len(), n - w + 1);
        let max = s.max_share.unwrap();
        prop_assert!(s.shares.iter().all(|x| x.share <= max));
    }
}

#[test]
fn generated_bundles_are_valid() {
    let mut rng = testkit::rng(99);
    for _ in 0..500 {
        let b = testkit::bundle(&mut rng, 10);
        assert_eq!(validate_bundle(&b), vec![]);
        run_case(&b, Exec::Sequential).unwrap();
    }
}
