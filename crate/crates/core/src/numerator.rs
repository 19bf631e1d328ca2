//! B1 screening and the net external-use guardrail
//! `V_ext^net = U + F + alpha*M - rebates - emissions - wash/self-dealing`.
//!
//! Deductions are netted once, against the flows that actually count. A
//! deduction recorded on an excluded (I/S/X) flow is reported but not
//! subtracted: the flow already contributes nothing, and subtracting again
//! would double count it.

use std::collections::BTreeSet;

use rust_decimal::Decimal;
use serde::Serialize;

use crate::decimal;
use crate::error::ConfigError;
use crate::model::{MotiveClass, NumeratorConfig, ValueFlow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MotiveScreen {
    CountsFull,
    CountsHaircut,
    Excluded,
}

pub fn screen_motive(flow: &ValueFlow) -> MotiveScreen {
    match flow.motive {
        MotiveClass::U | MotiveClass::F => MotiveScreen::CountsFull,
        MotiveClass::M => MotiveScreen::CountsHaircut,
        MotiveClass::I | MotiveClass::S | MotiveClass::X => MotiveScreen::Excluded,
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct NumeratorBreakdown {
    #[serde(with = "decimal::string")]
    pub use_oriented: Decimal,
    #[serde(with = "decimal::string")]
    pub financial_service: Decimal,
    #[serde(with = "decimal::string")]
    pub mixed: Decimal,
    #[serde(with = "decimal::string")]
    pub mixed_after_haircut: Decimal,
    #[serde(with = "decimal::string")]
    pub excluded_investment: Decimal,
    #[serde(with = "decimal::string")]
    pub excluded_subsidy: Decimal,
    #[serde(with = "decimal::string")]
    pub excluded_unknown: Decimal,
    #[serde(with = "decimal::string")]
    pub rebates: Decimal,
    #[serde(with = "decimal::string")]
    pub emissions: Decimal,
    #[serde(with = "decimal::string")]
    pub wash_self_dealing: Decimal,
    /// Deductions recorded on excluded flows; reported, not netted.
    #[serde(with = "decimal::string")]
    pub deductions_on_excluded: Decimal,
    #[serde(with = "decimal::string")]
    pub gross: Decimal,
}

impl NumeratorBreakdown {
    pub fn excluded_total(&self) -> Decimal {
        self.excluded_investment + self.excluded_subsidy + self.excluded_unknown
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NetExternalValue {
    #[serde(with = "decimal::string")]
    pub value: Decimal,
    #[serde(with = "decimal::opt_string")]
    pub alpha: Option<Decimal>,
    pub breakdown: NumeratorBreakdown,
    /// Set when deductions exceed the counted flows. Never clamped.
    pub negative: bool,
}

/// Checks the disclosed haircut. `alpha` may be absent only when no flow is
/// mixed-motive.
pub fn check_config(
    flows: &[ValueFlow],
    config: Option<&NumeratorConfig>,
) -> Result<Option<Decimal>, ConfigError> {
    let alpha = config.and_then(|c| c.alpha);
    if let Some(a) = alpha {
        if a < Decimal::ZERO || a > Decimal::ONE {
            return Err(ConfigError::AlphaOutOfRange(decimal::canonical(a)));
        }
        if config.is_none_or(|c| c.note.trim().is_empty()) {
            return Err(ConfigError::AlphaUnjustified);
        }
    }
    if alpha.is_none() && flows.iter().any(|f| f.motive == MotiveClass::M) {
        return Err(ConfigError::AlphaMissing);
    }
    let currencies: BTreeSet<&str> = flows.iter().map(|f| f.currency.as_str()).collect();
    if currencies.len() > 1 {
        return Err(ConfigError::MixedCurrency(
            currencies.into_iter().map(str::to_owned).collect(),
        ));
    }
    Ok(alpha)
}

pub fn net_external_value(
    flows: &[ValueFlow],
    config: Option<&NumeratorConfig>,
) -> Result<NetExternalValue, ConfigError> {
    let alpha = check_config(flows, config)?;
    let mut b = NumeratorBreakdown::default();

    for f in flows {
        let d = &f.deductions;
        match screen_motive(f) {
            MotiveScreen::Excluded => {
                match f.motive {
                    MotiveClass::I => b.excluded_investment += f.amount,
                    MotiveClass::S => b.excluded_subsidy += f.amount,
                    _ => b.excluded_unknown += f.amount,
                }
                b.deductions_on_excluded += d.total();
                continue;
            }
            MotiveScreen::CountsFull if f.motive == MotiveClass::U => b.use_oriented += f.amount,
            MotiveScreen::CountsFull => b.financial_service += f.amount,
            MotiveScreen::CountsHaircut => b.mixed += f.amount,
        }
        b.rebates += d.rebates;
        b.emissions += d.emissions;
        b.wash_self_dealing += d.wash_self_dealing;
    }

    // alpha is only None when there are no mixed flows
    b.mixed_after_haircut = alpha.map_or(Decimal::ZERO, |a| a * b.mixed);
    b.gross = b.use_oriented + b.financial_service + b.mixed_after_haircut;
    let value = b.gross - b.rebates - b.emissions - b.wash_self_dealing;

    Ok(NetExternalValue {
        value,
        alpha,
        negative: value < Decimal::ZERO,
        breakdown: b,
    })
}
