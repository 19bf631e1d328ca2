use evrc_core::admissibility::gate_case;
use evrc_core::coverage::compute_rav;
use evrc_core::error::Stage;
use evrc_core::testkit;
use evrc_core::{CoverageError, Pipeline, PipelineError, Strategy};

fn missing(e: PipelineError) -> (Stage, Stage) {
    match e {
        PipelineError::OutOfOrder { requested, missing } => (requested, missing),
        other => panic!("expected an ordering error, got {other}"),
    }
}

#[test]
fn coverage_before_gating_is_refused() {
    let bundle = testkit::bundle(&mut testkit::rng(3), 5);
    let mut p = Pipeline::new(&bundle, Strategy::Sequential);
    assert_eq!(
        missing(p.coverage().unwrap_err()),
        (Stage::Coverage, Stage::Validated)
    );
    p.validate().unwrap();
    assert_eq!(
        missing(p.coverage().unwrap_err()),
        (Stage::Coverage, Stage::Gated)
    );
    p.gate().unwrap();
    assert_eq!(
        missing(p.coverage().unwrap_err()),
        (Stage::Coverage, Stage::Numerator)
    );
    p.numerator().unwrap();
    p.coverage().unwrap();
}

#[test]
fn claims_and_report_wait_for_every_stage() {
    let bundle = testkit::bundle(&mut testkit::rng(4), 5);
    let mut p = Pipeline::new(&bundle, Strategy::Sequential);
    p.validate().unwrap();
    p.gate().unwrap();
    p.numerator().unwrap();
    p.coverage().unwrap();
    assert_eq!(
        missing(p.claims().unwrap_err()),
        (Stage::Claims, Stage::Breakpoints)
    );
    assert!(p.report().is_err());
    p.breakpoints().unwrap();
    assert_eq!(
        missing(p.report().unwrap_err()),
        (Stage::Claims, Stage::Claims)
    );
    p.claims().unwrap();
    p.report().unwrap();

    let steps: Vec<u8> = p.trace().iter().filter_map(|t| t.step).collect();
    assert_eq!(steps, [1, 2, 3, 4, 5, 6, 7, 8]);
}

#[test]
fn gates_from_another_bundle_are_rejected() {
    let mut rng = testkit::rng(5);
    let a = loop {
        let b = testkit::bundle(&mut rng, 6);
        if !b.flows.is_empty() {
            break b;
        }
    };
    let mut b = a.clone();
    b.flows.pop();
    b.routes.retain(|r| b.flows.iter().any(|f| f.id == r.flow_id));
    let gates = gate_case(&a, Strategy::Sequential).unwrap();
    assert!(matches!(
        compute_rav(&b, &gates),
        Err(CoverageError::NotGated(_))
    ));
}
