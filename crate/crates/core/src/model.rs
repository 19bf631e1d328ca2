//! Domain types shared by every stage of the coding pipeline.
//!
//! Input records mirror the on-disk case files one to one. Derived values
//! (bands, gate outcomes, breakpoints) live here as types but are only ever
//! produced by the stage that owns them.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use crate::decimal;

// ---------------------------------------------------------------------------
// Step 1: analysis unit

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitKind {
    Protocol,
    App,
    Company,
    Issuer,
    Chain,
    Dao,
    Composite,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisUnit {
    pub id: String,
    pub kind: UnitKind,
    pub boundary_note: String,
    /// Must be stated explicitly for composite units.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub is_mixed: Option<bool>,
}

impl AnalysisUnit {
    pub fn mixed(&self) -> bool {
        self.is_mixed.unwrap_or(false)
    }
}

// ---------------------------------------------------------------------------
// Step 2: critical incentive recipient W

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecipientClass {
    AuthorsCurators,
    Miners,
    Validators,
    SuppliersRiskLayers,
    StorageProviders,
    IssuerOperators,
    Other,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalRecipient {
    pub id: String,
    pub unit_id: String,
    pub recipient_class: RecipientClass,
    pub function_note: String,
    pub is_specified: bool,
}

// ---------------------------------------------------------------------------
// Periods

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "basis", rename_all = "snake_case", deny_unknown_fields)]
pub enum PeriodSpan {
    WallClock {
        start: DateTime<Utc>,
        end: DateTime<Utc>,
    },
    BlockHeight {
        start: u64,
        end: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Period {
    pub label: String,
    #[serde(flatten)]
    pub span: PeriodSpan,
}

impl Period {
    pub fn is_ordered(&self) -> bool {
        match &self.span {
            PeriodSpan::WallClock { start, end } => start < end,
            PeriodSpan::BlockHeight { start, end } => start < end,
        }
    }

    pub fn basis(&self) -> &'static str {
        match self.span {
            PeriodSpan::WallClock { .. } => "wall_clock",
            PeriodSpan::BlockHeight { .. } => "block_height",
        }
    }

    pub fn bounds_text(&self) -> (String, String) {
        match &self.span {
            PeriodSpan::WallClock { start, end } => (
                start.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                end.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            ),
            PeriodSpan::BlockHeight { start, end } => (start.to_string(), end.to_string()),
        }
    }
}

// ---------------------------------------------------------------------------
// Steps 3 and 4: motive and landing

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MotiveClass {
    /// Use-oriented payment.
    U,
    /// Financial-service use.
    F,
    /// Mixed motive; counts after the disclosed haircut.
    M,
    /// Investment-dependent.
    I,
    /// Subsidy loop.
    S,
    /// Unknown. A first-class value, never coerced to `U`.
    X,
}

impl MotiveClass {
    pub const ALL: [MotiveClass; 6] = [
        MotiveClass::U,
        MotiveClass::F,
        MotiveClass::M,
        MotiveClass::I,
        MotiveClass::S,
        MotiveClass::X,
    ];

    pub fn is_external_use(self) -> bool {
        matches!(self, MotiveClass::U | MotiveClass::F | MotiveClass::M)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LandingLocus {
    /// R_app: front end, operating company.
    App,
    /// R_proto: protocol contract or fee mechanism.
    Protocol,
    /// R_burn.
    Burn,
    /// I_new.
    NewIssuance,
    Treasury,
    IssuerBalanceSheet,
    SecondaryMarket,
    Other,
}

impl LandingLocus {
    pub const ALL: [LandingLocus; 8] = [
        LandingLocus::App,
        LandingLocus::Protocol,
        LandingLocus::Burn,
        LandingLocus::NewIssuance,
        LandingLocus::Treasury,
        LandingLocus::IssuerBalanceSheet,
        LandingLocus::SecondaryMarket,
        LandingLocus::Other,
    ];
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Deductions {
    #[serde(with = "decimal::string", default)]
    pub rebates: Decimal,
    #[serde(with = "decimal::string", default)]
    pub emissions: Decimal,
    #[serde(with = "decimal::string", default)]
    pub wash_self_dealing: Decimal,
}

impl Deductions {
    pub fn total(&self) -> Decimal {
        self.rebates + self.emissions + self.wash_self_dealing
    }
}

/// An external payment `x_f` observed in a period.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValueFlow {
    pub id: String,
    #[serde(with = "decimal::string")]
    pub amount: Decimal,
    pub currency: String,
    pub period_label: String,
    pub motive: MotiveClass,
    pub landing: LandingLocus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landing_note: Option<String>,
    pub payer_note: String,
    #[serde(default)]
    pub deductions: Deductions,
    /// The coder offered this flow as a numerator toward W coverage.
    #[serde(default)]
    pub intended_numerator: bool,
}

// ---------------------------------------------------------------------------
// Step 5: routes

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriState {
    Yes,
    No,
    Unknown,
}

impl TriState {
    pub const ALL: [TriState; 3] = [TriState::Yes, TriState::No, TriState::Unknown];

    pub fn is_yes(self) -> bool {
        self == TriState::Yes
    }
}

/// The four-check rubric. Every field is required in input files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteChecks {
    pub enforceability: TriState,
    pub beneficiary_specificity: TriState,
    /// `yes` means the route CAN be stopped without violating a binding rule.
    pub revocability: TriState,
    pub auditability: TriState,
}

impl RouteChecks {
    pub fn all_unknown(&self) -> bool {
        [
            self.enforceability,
            self.beneficiary_specificity,
            self.revocability,
            self.auditability,
        ]
        .iter()
        .all(|c| *c == TriState::Unknown)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteKind {
    None,
    VoluntaryDiscretionary,
    GovernanceMediated,
    ContractualPlatformRule,
    ProtocolEnforced,
}

impl RouteKind {
    pub const ALL: [RouteKind; 5] = [
        RouteKind::None,
        RouteKind::VoluntaryDiscretionary,
        RouteKind::GovernanceMediated,
        RouteKind::ContractualPlatformRule,
        RouteKind::ProtocolEnforced,
    ];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Route {
    pub id: String,
    pub flow_id: String,
    pub recipient_id: String,
    pub route_kind: RouteKind,
    pub checks: RouteChecks,
    #[serde(default)]
    pub escrowed_or_executed: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub source_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Captured only so validation can reject it; bands are derived.
    #[serde(rename = "band_E", default, skip_serializing_if = "Option::is_none")]
    pub band_e: Option<serde_json::Value>,
}

/// Ordinal routing strength `E`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Band {
    Zero,
    Quarter,
    Half,
    ThreeQuarters,
    Full,
}

impl Band {
    pub const ALL: [Band; 5] = [
        Band::Zero,
        Band::Quarter,
        Band::Half,
        Band::ThreeQuarters,
        Band::Full,
    ];

    pub fn value(self) -> Decimal {
        match self {
            Band::Zero => Decimal::ZERO,
            Band::Quarter => Decimal::new(25, 2),
            Band::Half => Decimal::new(5, 1),
            Band::ThreeQuarters => Decimal::new(75, 2),
            Band::Full => Decimal::ONE,
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&decimal::canonical(self.value()))
    }
}

impl Serialize for Band {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

// ---------------------------------------------------------------------------
// Step 8: evidence

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EvidenceGrade {
    /// Code, protocol rules, on-chain execution, audited filings.
    G1,
    /// Official documentation and dashboards.
    G2,
    /// Media and narrative.
    G3,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidenceSource {
    pub id: String,
    pub grade: EvidenceGrade,
    pub capture_date: DateTime<Utc>,
    pub locator: String,
    pub fields_and_dates_specified: bool,
    /// The captured sources do not cover what the coder needed to resolve.
    #[serde(default)]
    pub coverage_gap: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

// ---------------------------------------------------------------------------
// Step 7: reward denominator V_W(T)

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenominatorStatus {
    Measured,
    Bounded,
    Unavailable,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardDenominator {
    pub recipient_id: String,
    pub period_label: String,
    pub status: DenominatorStatus,
    #[serde(
        default,
        with = "decimal::opt_string",
        skip_serializing_if = "Option::is_none"
    )]
    pub value: Option<Decimal>,
    #[serde(
        default,
        with = "decimal::opt_string",
        skip_serializing_if = "Option::is_none"
    )]
    pub bound_low: Option<Decimal>,
    #[serde(
        default,
        with = "decimal::opt_string",
        skip_serializing_if = "Option::is_none"
    )]
    pub bound_high: Option<Decimal>,
    #[serde(default)]
    pub source_ids: Vec<String>,
}

// ---------------------------------------------------------------------------
// Numerator configuration

/// Haircut for mixed-motive flows. Both fields are mandatory when present.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumeratorConfig {
    #[serde(
        default,
        with = "decimal::opt_string",
        skip_serializing_if = "Option::is_none"
    )]
    pub alpha: Option<Decimal>,
    #[serde(default)]
    pub note: String,
}

// ---------------------------------------------------------------------------
// Gate outcomes and breakpoints

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accepted,
    Rejected,
    SourceBlocked,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReasonCode {
    NoRoute,
    BandZero,
    BeneficiaryUnspecific,
    MotiveExcluded,
    LandingBurnMismatch,
    UnitMixed,
    EvidenceInsufficient,
    PeriodMismatch,
    SourceCoverageGap,
}

impl ReasonCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ReasonCode::NoRoute => "no_route",
            ReasonCode::BandZero => "band_zero",
            ReasonCode::BeneficiaryUnspecific => "beneficiary_unspecific",
            ReasonCode::MotiveExcluded => "motive_excluded",
            ReasonCode::LandingBurnMismatch => "landing_burn_mismatch",
            ReasonCode::UnitMixed => "unit_mixed",
            ReasonCode::EvidenceInsufficient => "evidence_insufficient",
            ReasonCode::PeriodMismatch => "period_mismatch",
            ReasonCode::SourceCoverageGap => "source_coverage_gap",
        }
    }
}

/// Per-flow admissibility decision.
///
/// For rejected and source-blocked flows `reason_codes` lists every failed
/// gate. For accepted flows it lists the gates that were evaluated and
/// passed, so the list is never empty.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GateOutcome {
    pub flow_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub route_id: Option<String>,
    pub decision: Decision,
    pub reason_codes: Vec<ReasonCode>,
    pub narrative: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum BreakpointCode {
    B1,
    B2,
    B3,
    B4,
}

impl BreakpointCode {
    pub fn name(self) -> &'static str {
        match self {
            BreakpointCode::B1 => "pseudo_consumption",
            BreakpointCode::B2 => "app_protocol_fracture",
            BreakpointCode::B3 => "burn_capture_mismatch",
            BreakpointCode::B4 => "issuance_market_dependence",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Breakpoint {
    pub code: BreakpointCode,
    pub name: &'static str,
    /// Flows whose outcomes triggered the breakpoint.
    pub flow_ids: Vec<String>,
    /// Union of the reason codes carried by those outcomes.
    pub justification: Vec<ReasonCode>,
}

// ---------------------------------------------------------------------------
// Claims

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimLevel {
    MechanismClaim,
    BoundedNumericClaim,
    FinalClosureClaim,
}

impl ClaimLevel {
    pub const ALL: [ClaimLevel; 3] = [
        ClaimLevel::MechanismClaim,
        ClaimLevel::BoundedNumericClaim,
        ClaimLevel::FinalClosureClaim,
    ];
}

/// Closed set of claim templates. Free-text claims are never gated and never
/// emitted; adding a claim means adding a variant here and a rule in
/// [`crate::claims`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ClaimTemplate {
    /// An accepted route carries external-use value to W.
    MechanismRouteExists,
    /// A route mechanism toward W is documented, whether or not any flow
    /// through it has been accepted yet.
    RouteMechanismDocumented,
    /// No accepted route to W in the captured sources.
    BoundedRouteNull,
    /// Issuer-level closure through an accepted issuer-balance-sheet route.
    IssuerLevelClosure,
    /// Bounded numeric fee/revenue evidence for an accepted route.
    BoundedFeeShare,
    FinalRcr,
    /// No route to W ever existed.
    HistoricalRouteNull,
    NoRevenue,
    StableFeeReplacement,
    LongRunSecurityVerdict,
    BurnAsRewardCoverage,
    HostValidatorCoverage,
}

impl ClaimTemplate {
    pub const ALL: [ClaimTemplate; 12] = [
        ClaimTemplate::MechanismRouteExists,
        ClaimTemplate::RouteMechanismDocumented,
        ClaimTemplate::BoundedRouteNull,
        ClaimTemplate::IssuerLevelClosure,
        ClaimTemplate::BoundedFeeShare,
        ClaimTemplate::FinalRcr,
        ClaimTemplate::HistoricalRouteNull,
        ClaimTemplate::NoRevenue,
        ClaimTemplate::StableFeeReplacement,
        ClaimTemplate::LongRunSecurityVerdict,
        ClaimTemplate::BurnAsRewardCoverage,
        ClaimTemplate::HostValidatorCoverage,
    ];

    pub fn level(self) -> ClaimLevel {
        use ClaimTemplate::*;
        match self {
            MechanismRouteExists | RouteMechanismDocumented | BoundedRouteNull
            | IssuerLevelClosure => ClaimLevel::MechanismClaim,
            BoundedFeeShare => ClaimLevel::BoundedNumericClaim,
            FinalRcr | HistoricalRouteNull | NoRevenue | StableFeeReplacement
            | LongRunSecurityVerdict | BurnAsRewardCoverage | HostValidatorCoverage => {
                ClaimLevel::FinalClosureClaim
            }
        }
    }

    pub fn key(self) -> String {
        serde_json::to_value(self)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default()
    }
}

// ---------------------------------------------------------------------------
// Bulk rows

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BtcBlockRow {
    pub height: u64,
    #[serde(with = "decimal::string")]
    pub fees: Decimal,
    #[serde(with = "decimal::string")]
    pub subsidy: Decimal,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EthRewardRow {
    pub window: String,
    #[serde(with = "decimal::string")]
    pub priority_fees_to_proposer: Decimal,
    #[serde(with = "decimal::string")]
    pub proposer_mev: Decimal,
    #[serde(with = "decimal::string")]
    pub consensus_issuance: Decimal,
    #[serde(with = "decimal::string")]
    pub penalties_slashing: Decimal,
    #[serde(with = "decimal::string")]
    pub base_fee_burn: Decimal,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolFeeRow {
    pub period: String,
    #[serde(with = "decimal::string")]
    pub fee: Decimal,
    #[serde(with = "decimal::string")]
    pub revenue: Decimal,
}

/// Rows together with where they came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowSet<T> {
    pub rows: Vec<T>,
    /// Case-relative path of the CSV or snapshot file.
    pub origin: String,
    pub grade: EvidenceGrade,
    pub fields_and_dates_specified: bool,
    pub coverage_gap: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CaseRows {
    pub btc_blocks: Option<RowSet<BtcBlockRow>>,
    pub eth_rewards: Option<RowSet<EthRewardRow>>,
    pub protocol_fees: Option<RowSet<ProtocolFeeRow>>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

// ---------------------------------------------------------------------------
// The bundle

/// Contents of `case.json`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseHeader {
    pub schema_version: u32,
    pub case_id: String,
    pub title: String,
    pub unit: AnalysisUnit,
    pub recipient: CriticalRecipient,
    pub periods: Vec<Period>,
    pub case_period: String,
    pub currency: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numerator: Option<NumeratorConfig>,
    #[serde(
        default,
        with = "decimal::opt_string",
        skip_serializing_if = "Option::is_none"
    )]
    pub b4_threshold: Option<Decimal>,
    #[serde(default)]
    pub pooled_capture: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fee_share_window: Option<usize>,
    #[serde(default)]
    pub claims: Vec<ClaimTemplate>,
}

/// One analysis unit with everything the coder recorded about it.
#[derive(Clone, Debug, PartialEq)]
pub struct CaseBundle {
    pub header: CaseHeader,
    pub flows: Vec<ValueFlow>,
    pub routes: Vec<Route>,
    pub sources: Vec<EvidenceSource>,
    pub denominators: Vec<RewardDenominator>,
    pub rows: CaseRows,
    /// Digests of every file the bundle was built from, sorted by path.
    pub provenance: Vec<FileDigest>,
}

/// Serialized name of a unit-like enum variant, for text output.
pub fn label<T: Serialize>(value: &T) -> String {
    match serde_json::to_value(value) {
        Ok(serde_json::Value::String(s)) => s,
        _ => String::new(),
    }
}

/// Default share of W's incoming rewards below which B4 is coded.
pub fn default_b4_threshold() -> Decimal {
    Decimal::new(5, 1)
}

impl CaseBundle {
    pub fn case_id(&self) -> &str {
        &self.header.case_id
    }

    pub fn unit(&self) -> &AnalysisUnit {
        &self.header.unit
    }

    pub fn recipient(&self) -> &CriticalRecipient {
        &self.header.recipient
    }

    pub fn case_period(&self) -> Option<&Period> {
        self.header
            .periods
            .iter()
            .find(|p| p.label == self.header.case_period)
    }

    pub fn b4_threshold(&self) -> Decimal {
        self.header.b4_threshold.unwrap_or_else(default_b4_threshold)
    }

    pub fn flow(&self, id: &str) -> Option<&ValueFlow> {
        self.flows.iter().find(|f| f.id == id)
    }

    /// Routes keyed by flow id. Validation guarantees at most one per flow.
    pub fn routes_by_flow(&self) -> BTreeMap<&str, &Route> {
        self.routes
            .iter()
            .map(|r| (r.flow_id.as_str(), r))
            .collect()
    }

    pub fn source(&self, id: &str) -> Option<&EvidenceSource> {
        self.sources.iter().find(|s| s.id == id)
    }

    /// The denominator for the case recipient and case period, if recorded.
    pub fn case_denominator(&self) -> Option<&RewardDenominator> {
        self.denominators.iter().find(|d| {
            d.recipient_id == self.header.recipient.id && d.period_label == self.header.case_period
        })
    }

    /// Evidence register including sources synthesized from row files.
    pub fn evidence_register(&self) -> Vec<EvidenceSource> {
        let mut register = self.sources.clone();
        let epoch = DateTime::<Utc>::UNIX_EPOCH;
        let mut push = |origin: &str, grade, fields, gap| {
            register.push(EvidenceSource {
                id: format!("rows:{origin}"),
                grade,
                capture_date: epoch,
                locator: origin.to_string(),
                fields_and_dates_specified: fields,
                coverage_gap: gap,
                note: None,
            });
        };
        if let Some(r) = &self.rows.btc_blocks {
            push(&r.origin, r.grade, r.fields_and_dates_specified, r.coverage_gap);
        }
        if let Some(r) = &self.rows.eth_rewards {
            push(&r.origin, r.grade, r.fields_and_dates_specified, r.coverage_gap);
        }
        if let Some(r) = &self.rows.protocol_fees {
            push(&r.origin, r.grade, r.fields_and_dates_specified, r.coverage_gap);
        }
        register
    }
}
