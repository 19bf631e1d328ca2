//! Stage two: route-admissible value, the routed closure ratio, and the two
//! chain-specific reward views (Ethereum validator reward split, Bitcoin
//! rolling fee share).

use rust_decimal::Decimal;
use serde::Serialize;

use crate::admissibility::GateSet;
use crate::decimal;
use crate::error::CoverageError;
use crate::exec::{self, Strategy};
use crate::model::{
    AnalysisUnit, BtcBlockRow, CaseBundle, CriticalRecipient, Decision, DenominatorStatus,
    EthRewardRow, RewardDenominator,
};

/// RAV for one recipient and period. Built only by [`compute_rav`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RavFigures {
    recipient_id: String,
    period_label: String,
    /// Sum of amount x E over accepted flows.
    #[serde(with = "decimal::string")]
    weighted: Decimal,
    /// Sum of amount over accepted flows.
    #[serde(with = "decimal::string")]
    unweighted: Decimal,
    accepted_flows: usize,
}

impl RavFigures {
    pub fn weighted(&self) -> Decimal {
        self.weighted
    }

    pub fn unweighted(&self) -> Decimal {
        self.unweighted
    }

    pub fn accepted_flows(&self) -> usize {
        self.accepted_flows
    }

    pub fn recipient_id(&self) -> &str {
        &self.recipient_id
    }

    pub fn period_label(&self) -> &str {
        &self.period_label
    }
}

/// Sums accepted flows. Refuses to run unless `gates` was produced for this
/// exact bundle.
pub fn compute_rav(bundle: &CaseBundle, gates: &GateSet) -> Result<RavFigures, CoverageError> {
    if !gates.covers(bundle) {
        return Err(CoverageError::NotGated(format!(
            "{} gate outcome(s) for {} flow(s) in case {}",
            gates.outcomes().len(),
            bundle.flows.len(),
            bundle.case_id()
        )));
    }
    let mut weighted = Decimal::ZERO;
    let mut unweighted = Decimal::ZERO;
    let mut accepted_flows = 0;
    for (i, (flow, outcome)) in bundle.flows.iter().zip(gates.outcomes()).enumerate() {
        if outcome.decision != Decision::Accepted {
            continue;
        }
        let band = gates.flow_band(i).ok_or_else(|| {
            CoverageError::NotGated(format!("accepted flow {} has no banded route", flow.id))
        })?;
        weighted += flow.amount * band.value();
        unweighted += flow.amount;
        accepted_flows += 1;
    }
    Ok(RavFigures {
        recipient_id: bundle.recipient().id.clone(),
        period_label: bundle.header.case_period.clone(),
        weighted,
        unweighted,
        accepted_flows,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RcrBlock {
    DenominatorUnavailable,
    RecipientUnspecified,
    UnitMixed,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rcr {
    Point(Decimal),
    /// Bounded denominator: `[rav / high, rav / low]`.
    Interval { low: Decimal, high: Decimal },
    Blocked(RcrBlock),
}

impl Rcr {
    pub fn is_blocked(&self) -> bool {
        matches!(self, Rcr::Blocked(_))
    }
}

pub fn compute_rcr(
    rav: &RavFigures,
    denom: Option<&RewardDenominator>,
    recipient: &CriticalRecipient,
    unit: &AnalysisUnit,
) -> Result<Rcr, CoverageError> {
    if !recipient.is_specified {
        return Ok(Rcr::Blocked(RcrBlock::RecipientUnspecified));
    }
    if unit.mixed() {
        return Ok(Rcr::Blocked(RcrBlock::UnitMixed));
    }
    let Some(denom) = denom else {
        return Ok(Rcr::Blocked(RcrBlock::DenominatorUnavailable));
    };
    let rav = rav.weighted();
    match denom.status {
        DenominatorStatus::Unavailable => Ok(Rcr::Blocked(RcrBlock::DenominatorUnavailable)),
        DenominatorStatus::Measured => match denom.value {
            Some(v) if v > Decimal::ZERO => Ok(Rcr::Point(rav / v)),
            _ => Err(CoverageError::NonPositiveDenominator {
                recipient: denom.recipient_id.clone(),
                period: denom.period_label.clone(),
            }),
        },
        DenominatorStatus::Bounded => match (denom.bound_low, denom.bound_high) {
            (Some(lo), Some(hi)) if lo > Decimal::ZERO && lo <= hi => Ok(Rcr::Interval {
                low: rav / hi,
                high: rav / lo,
            }),
            _ => Err(CoverageError::InvalidBounds {
                recipient: denom.recipient_id.clone(),
                period: denom.period_label.clone(),
            }),
        },
    }
}

/// Validator-side reward for one window with burn kept apart.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EthRewardSplit {
    pub window: String,
    /// priority fees + proposer MEV + consensus issuance - penalties/slashing
    #[serde(with = "decimal::string")]
    pub validator_reward: Decimal,
    /// R_burn. Never part of `validator_reward`.
    #[serde(with = "decimal::string")]
    pub base_fee_burn: Decimal,
}

pub fn eth_validator_reward(row: &EthRewardRow) -> Result<EthRewardSplit, CoverageError> {
    for (field, v) in [
        ("priority_fees_to_proposer", row.priority_fees_to_proposer),
        ("proposer_mev", row.proposer_mev),
        ("consensus_issuance", row.consensus_issuance),
        ("penalties_slashing", row.penalties_slashing),
        ("base_fee_burn", row.base_fee_burn),
    ] {
        if v < Decimal::ZERO {
            return Err(CoverageError::NegativeComponent {
                window: row.window.clone(),
                field,
            });
        }
    }
    Ok(EthRewardSplit {
        window: row.window.clone(),
        validator_reward: row.priority_fees_to_proposer + row.proposer_mev
            + row.consensus_issuance
            - row.penalties_slashing,
        base_fee_burn: row.base_fee_burn,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WindowShare {
    pub start_height: u64,
    #[serde(with = "decimal::string")]
    pub share: Decimal,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FeeShareSeries {
    pub window: usize,
    pub shares: Vec<WindowShare>,
    /// Start heights of windows whose total reward was zero.
    pub skipped: Vec<u64>,
    #[serde(with = "decimal::opt_string")]
    pub max_share: Option<Decimal>,
    /// Earliest start height attaining `max_share`.
    pub max_window_start: Option<u64>,
}

pub fn btc_fee_share(rows: &[BtcBlockRow], window: usize) -> Result<FeeShareSeries, CoverageError> {
    btc_fee_share_with(rows, window, Strategy::default())
}

/// Rolling `fees / (fees + subsidy)` over every contiguous window.
pub fn btc_fee_share_with(
    rows: &[BtcBlockRow],
    window: usize,
    strategy: Strategy,
) -> Result<FeeShareSeries, CoverageError> {
    if window == 0 {
        return Err(CoverageError::ZeroWindow);
    }
    if rows.len() < window {
        return Err(CoverageError::WindowTooLarge {
            window,
            rows: rows.len(),
        });
    }
    for pair in rows.windows(2) {
        if pair[1].height != pair[0].height + 1 {
            return Err(CoverageError::HeightGap {
                before: pair[0].height,
                after: pair[1].height,
            });
        }
    }

    // prefix sums keep every window exact and O(1)
    let mut fee_prefix = Vec::with_capacity(rows.len() + 1);
    let mut reward_prefix = Vec::with_capacity(rows.len() + 1);
    fee_prefix.push(Decimal::ZERO);
    reward_prefix.push(Decimal::ZERO);
    for r in rows {
        fee_prefix.push(fee_prefix.last().copied().unwrap_or_default() + r.fees);
        reward_prefix
            .push(reward_prefix.last().copied().unwrap_or_default() + r.fees + r.subsidy);
    }

    let count = rows.len() - window + 1;
    let computed = exec::map_range(count, strategy, |i| {
        let fees = fee_prefix[i + window] - fee_prefix[i];
        let total = reward_prefix[i + window] - reward_prefix[i];
        let start = rows[i].height;
        if total.is_zero() {
            Err(start)
        } else {
            Ok(WindowShare {
                start_height: start,
                share: fees / total,
            })
        }
    });

    let mut shares = Vec::with_capacity(count);
    let mut skipped = Vec::new();
    for c in computed {
        match c {
            Ok(s) => shares.push(s),
            Err(h) => skipped.push(h),
        }
    }
    let mut best: Option<&WindowShare> = None;
    for s in &shares {
        if best.is_none_or(|b| s.share > b.share) {
            best = Some(s);
        }
    }
    let (max_share, max_window_start) = match best {
        Some(b) => (Some(b.share), Some(b.start_height)),
        None => (None, None),
    };
    Ok(FeeShareSeries {
        window,
        shares,
        skipped,
        max_share,
        max_window_start,
    })
}
