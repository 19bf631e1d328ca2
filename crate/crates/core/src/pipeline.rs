//! Runtime stage machine over one bundle.
//!
//! Each stage refuses to run until every earlier stage has completed, and
//! records what it did in a numbered trace that follows the eight-step coding
//! order.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::admissibility::{classify_breakpoints, gate_case, GateSet};
use crate::claims::{gate_claims, ClaimContext, ClaimVerdict};
use crate::coverage::{
    btc_fee_share_with, compute_rav, compute_rcr, eth_validator_reward, EthRewardSplit,
    FeeShareSeries, RavFigures, Rcr,
};
use crate::decimal;
use crate::error::{PipelineError, Stage};
use crate::exec::Strategy;
use crate::model::{label, Breakpoint, CaseBundle, ValueFlow};
use crate::numerator::{net_external_value, NetExternalValue};
use crate::report::{render_report, CaseReport, StageOutputs};
use crate::validate::validate_bundle;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    /// Coding-order step, 1 to 8. `None` for guardrail lines that belong
    /// to the preceding step.
    pub step: Option<u8>,
    pub title: &'static str,
    pub detail: String,
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.step {
            Some(n) => write!(f, "[{n}/8] {:<20} {}", self.title, self.detail),
            None => write!(f, "      {:<20} {}", self.title, self.detail),
        }
    }
}

pub struct Pipeline<'a> {
    bundle: &'a CaseBundle,
    strategy: Strategy,
    validated: bool,
    gates: Option<GateSet>,
    numerator: Option<NetExternalValue>,
    rav: Option<RavFigures>,
    rcr: Option<Rcr>,
    eth: Option<Vec<EthRewardSplit>>,
    fee_share: Option<FeeShareSeries>,
    breakpoints: Option<Vec<Breakpoint>>,
    verdicts: Option<Vec<ClaimVerdict>>,
    trace: Vec<TraceStep>,
}

fn counts<K: Ord + Serialize>(items: impl Iterator<Item = K>) -> String {
    let mut m: BTreeMap<K, usize> = BTreeMap::new();
    for k in items {
        *m.entry(k).or_default() += 1;
    }
    if m.is_empty() {
        return "no flows".into();
    }
    m.iter()
        .map(|(k, n)| format!("{}:{n}", label(k)))
        .collect::<Vec<_>>()
        .join(" ")
}

impl<'a> Pipeline<'a> {
    pub fn new(bundle: &'a CaseBundle, strategy: Strategy) -> Self {
        Pipeline {
            bundle,
            strategy,
            validated: false,
            gates: None,
            numerator: None,
            rav: None,
            rcr: None,
            eth: None,
            fee_share: None,
            breakpoints: None,
            verdicts: None,
            trace: Vec::new(),
        }
    }

    fn done(&self, stage: Stage) -> bool {
        match stage {
            Stage::Validated => self.validated,
            Stage::Gated => self.gates.is_some(),
            Stage::Numerator => self.numerator.is_some(),
            Stage::Coverage => self.rcr.is_some(),
            Stage::Breakpoints => self.breakpoints.is_some(),
            Stage::Claims => self.verdicts.is_some(),
        }
    }

    fn require(&self, requested: Stage) -> Result<(), PipelineError> {
        const ORDER: [Stage; 6] = [
            Stage::Validated,
            Stage::Gated,
            Stage::Numerator,
            Stage::Coverage,
            Stage::Breakpoints,
            Stage::Claims,
        ];
        match ORDER
            .iter()
            .take_while(|s| **s < requested)
            .find(|s| !self.done(**s))
        {
            Some(missing) => Err(PipelineError::OutOfOrder {
                requested,
                missing: *missing,
            }),
            None => Ok(()),
        }
    }

    fn note(&mut self, step: Option<u8>, title: &'static str, detail: String) {
        self.trace.push(TraceStep { step, title, detail });
    }

    pub fn trace(&self) -> &[TraceStep] {
        &self.trace
    }

    /// Steps 1 and 2 are checked as part of bundle validation.
    pub fn validate(&mut self) -> Result<(), PipelineError> {
        let violations = validate_bundle(self.bundle);
        if !violations.is_empty() {
            return Err(PipelineError::Invalid(violations));
        }
        let unit = self.bundle.unit();
        let w = self.bundle.recipient();
        self.note(
            Some(1),
            "analysis unit",
            format!("{} ({}, mixed={})", unit.id, label(&unit.kind), unit.mixed()),
        );
        self.note(
            Some(2),
            "critical recipient",
            format!(
                "{} ({}, specified={})",
                w.id,
                label(&w.recipient_class),
                w.is_specified
            ),
        );
        self.validated = true;
        Ok(())
    }

    /// Steps 3 to 6: motive and landing are read from the flows, then every
    /// route is banded and every flow gated.
    pub fn gate(&mut self) -> Result<&GateSet, PipelineError> {
        self.require(Stage::Gated)?;
        let gates = gate_case(self.bundle, self.strategy)?;
        let flows = &self.bundle.flows;
        self.note(Some(3), "payment motive", counts(flows.iter().map(|f| f.motive)));
        self.note(Some(4), "value landing", counts(flows.iter().map(|f| f.landing)));
        let bands = if gates.bands().is_empty() {
            "no route records".to_string()
        } else {
            gates
                .bands()
                .iter()
                .map(|b| format!("{}=E{}", b.route_id, b.resulting_e))
                .collect::<Vec<_>>()
                .join(" ")
        };
        self.note(Some(5), "route bands", bands);
        self.note(
            Some(6),
            "admissibility",
            counts(gates.outcomes().iter().map(|o| o.decision)),
        );
        self.gates = Some(gates);
        Ok(self.gates.as_ref().expect("just set"))
    }

    /// Net external-use guardrail over the flows of the case period.
    pub fn numerator(&mut self) -> Result<&NetExternalValue, PipelineError> {
        self.require(Stage::Numerator)?;
        let period = &self.bundle.header.case_period;
        let flows: Vec<ValueFlow> = self
            .bundle
            .flows
            .iter()
            .filter(|f| &f.period_label == period)
            .cloned()
            .collect();
        let v = net_external_value(&flows, self.bundle.header.numerator.as_ref())?;
        self.note(
            None,
            "guardrail",
            format!(
                "V_ext^net={} excluded={}{}",
                decimal::canonical(v.value),
                decimal::canonical(v.breakdown.excluded_total()),
                if v.negative { " (negative)" } else { "" }
            ),
        );
        self.numerator = Some(v);
        Ok(self.numerator.as_ref().expect("just set"))
    }

    /// Step 7: RAV, RCR and the chain-specific reward views.
    pub fn coverage(&mut self) -> Result<&Rcr, PipelineError> {
        self.require(Stage::Coverage)?;
        let gates = self.gates.as_ref().expect("required above");
        let b = self.bundle;
        let rav = compute_rav(b, gates)?;
        let rcr = compute_rcr(&rav, b.case_denominator(), b.recipient(), b.unit())?;
        let eth = match &b.rows.eth_rewards {
            Some(set) => Some(
                set.rows
                    .iter()
                    .map(eth_validator_reward)
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            None => None,
        };
        let fee_share = match (&b.rows.btc_blocks, b.header.fee_share_window) {
            (Some(set), Some(window)) => Some(btc_fee_share_with(&set.rows, window, self.strategy)?),
            _ => None,
        };
        let rcr_text = match &rcr {
            Rcr::Point(v) => format!("point {}", decimal::canonical(*v)),
            Rcr::Interval { low, high } => format!(
                "interval [{}, {}]",
                decimal::canonical(*low),
                decimal::canonical(*high)
            ),
            Rcr::Blocked(why) => format!("blocked ({})", label(why)),
        };
        self.note(
            Some(7),
            "coverage",
            format!(
                "RAV weighted={} unweighted={}; RCR {}",
                decimal::canonical(rav.weighted()),
                decimal::canonical(rav.unweighted()),
                rcr_text
            ),
        );
        self.rav = Some(rav);
        self.eth = eth;
        self.fee_share = fee_share;
        self.rcr = Some(rcr);
        Ok(self.rcr.as_ref().expect("just set"))
    }

    pub fn breakpoints(&mut self) -> Result<&[Breakpoint], PipelineError> {
        self.require(Stage::Breakpoints)?;
        let gates = self.gates.as_ref().expect("required above");
        let found = classify_breakpoints(self.bundle, gates);
        let text = if found.is_empty() {
            "none".to_string()
        } else {
            found
                .iter()
                .map(|b| format!("{:?}", b.code))
                .collect::<Vec<_>>()
                .join(" ")
        };
        self.note(None, "breakpoints", text);
        self.breakpoints = Some(found);
        Ok(self.breakpoints.as_deref().expect("just set"))
    }

    /// Step 8.
    pub fn claims(&mut self) -> Result<&[ClaimVerdict], PipelineError> {
        self.require(Stage::Claims)?;
        let ctx = ClaimContext {
            bundle: self.bundle,
            gates: self.gates.as_ref().expect("required above"),
            rcr: self.rcr.as_ref().expect("required above"),
            breakpoints: self.breakpoints.as_deref().expect("required above"),
        };
        let verdicts = gate_claims(&self.bundle.header.claims, &ctx);
        let allowed = verdicts.iter().filter(|v| v.allowed).count();
        self.note(
            Some(8),
            "claim gates",
            format!("{allowed} allowed, {} blocked", verdicts.len() - allowed),
        );
        self.verdicts = Some(verdicts);
        Ok(self.verdicts.as_deref().expect("just set"))
    }

    /// Renders the report. Only available once every stage has run.
    pub fn report(&self) -> Result<CaseReport, PipelineError> {
        self.require(Stage::Claims)?;
        if !self.done(Stage::Claims) {
            return Err(PipelineError::OutOfOrder {
                requested: Stage::Claims,
                missing: Stage::Claims,
            });
        }
        let out = StageOutputs {
            gates: self.gates.as_ref().expect("claims ran"),
            numerator: self.numerator.as_ref().expect("claims ran"),
            rav: self.rav.as_ref().expect("claims ran"),
            rcr: self.rcr.as_ref().expect("claims ran"),
            eth_rewards: self.eth.as_deref(),
            fee_share: self.fee_share.as_ref(),
            breakpoints: self.breakpoints.as_deref().expect("claims ran"),
            verdicts: self.verdicts.as_deref().expect("claims ran"),
        };
        render_report(self.bundle, &out)
    }
}

/// Runs every stage in order and renders the report.
pub fn run_case(
    bundle: &CaseBundle,
    strategy: Strategy,
) -> Result<(CaseReport, Vec<TraceStep>), PipelineError> {
    let mut p = Pipeline::new(bundle, strategy);
    p.validate()?;
    p.gate()?;
    p.numerator()?;
    p.coverage()?;
    p.breakpoints()?;
    p.claims()?;
    let report = p.report()?;
    Ok((report, p.trace))
}
