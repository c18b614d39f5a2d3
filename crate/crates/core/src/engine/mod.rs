//! Template execution: acceptance and bidding tactics and the
//! alternating-offers session.

mod bidding;
mod opponent;
mod pareto;
pub mod session;

pub use bidding::{
    boulware_bid, boulware_target, opponent_greedy, random_above_threshold, select_bid,
    BiddingContext,
};
pub use opponent::OpponentModel;
pub use pareto::{pareto_front, topsis_closeness, topsis_select};
pub use session::{
    builtin_boulware, run_session, AcceptanceRecord, Action, Actor, AgentSpec, Agreement,
    SessionConfig, SessionOutcome, TranscriptEntry,
};

use crate::domain::{AgentState, Bid, DomainError, NegotiationDomain, UtilityModel};
use crate::template::{AcceptanceTactic, BoulwareParams, PhaseRule, StrategyTemplate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest outcome space the engine will enumerate.
pub const ENUMERATION_CAP: usize = 1_000_000;

/// Threshold used by QuantileConcession before any opponent bid arrived.
pub const EMPTY_HISTORY_THRESHOLD: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("opponent history is empty")]
    EmptyHistory,
    #[error("outcome space of {outcomes} bids exceeds the enumeration cap of {cap}")]
    DomainTooLarge { outcomes: usize, cap: usize },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("configuration: {0}")]
    Config(String),
    #[error("template `{0}` has the wrong kind for this use")]
    WrongKind(String),
}

/// Piecewise-linear `ū_t` through `(t, value)` breakpoints, constant
/// outside the first and last breakpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct DynamicSchedule {
    points: Vec<(f64, f64)>,
}

impl DynamicSchedule {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, EngineError> {
        if points.is_empty() {
            return Err(EngineError::Config("dynamic threshold needs at least one breakpoint".into()));
        }
        for &(t, v) in &points {
            if !(0.0..=1.0).contains(&t) || !(0.0..=1.0).contains(&v) {
                return Err(EngineError::Config(format!(
                    "breakpoint ({t}, {v}) outside [0, 1]"
                )));
            }
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(EngineError::Config("breakpoint times must increase".into()));
        }
        Ok(DynamicSchedule { points })
    }

    pub fn constant(value: f64) -> Self {
        DynamicSchedule {
            points: vec![(0.0, value.clamp(0.0, 1.0))],
        }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let first = self.points[0];
        let last = self.points[self.points.len() - 1];
        if t <= first.0 {
            return first.1;
        }
        if t >= last.0 {
            return last.1;
        }
        let i = self.points.partition_point(|p| p.0 <= t);
        let (t0, v0) = self.points[i - 1];
        let (t1, v1) = self.points[i];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }
}

impl TryFrom<Vec<(f64, f64)>> for DynamicSchedule {
    type Error = EngineError;

    fn try_from(points: Vec<(f64, f64)>) -> Result<Self, EngineError> {
        DynamicSchedule::new(points)
    }
}

impl From<DynamicSchedule> for Vec<(f64, f64)> {
    fn from(s: DynamicSchedule) -> Self {
        s.points
    }
}

impl Default for DynamicSchedule {
    fn default() -> Self {
        DynamicSchedule::constant(0.8)
    }
}

/// Values for the configurable parts of the tactics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TacticConfig {
    /// `u` for FixedThreshold tactics written without a literal.
    pub fixed_threshold: f64,
    /// Boulware parameters for tactics written without arguments.
    pub boulware: BoulwareParams,
    pub dynamic_threshold: DynamicSchedule,
}

pub const DEFAULT_FIXED_THRESHOLD: f64 = 0.6;

impl Default for TacticConfig {
    fn default() -> Self {
        TacticConfig {
            fixed_threshold: DEFAULT_FIXED_THRESHOLD,
            boulware: BoulwareParams::default(),
            dynamic_threshold: DynamicSchedule::default(),
        }
    }
}

pub fn utility(model: &UtilityModel, bid: &Bid) -> Result<f64, EngineError> {
    Ok(model.utility(bid)?)
}

/// The `p`-th best of `utilities`: sorted descending, `p` clamped to
/// `[0, 1]`, nearest rank `max(1, ceil(p·n))`.
pub fn empirical_quantile(utilities: &[f64], p: f64) -> Result<f64, EngineError> {
    if utilities.is_empty() {
        return Err(EngineError::EmptyHistory);
    }
    let mut sorted = utilities.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let p = if p.is_nan() { 0.0 } else { p.clamp(0.0, 1.0) };
    let rank = ((p * sorted.len() as f64).ceil() as usize).max(1);
    Ok(sorted[rank.min(sorted.len()) - 1])
}

/// Threshold a single acceptance tactic imposes in `state`.
pub fn tactic_threshold(
    tactic: &AcceptanceTactic,
    state: &AgentState,
    own: &UtilityModel,
    config: &TacticConfig,
) -> Result<f64, EngineError> {
    match tactic {
        AcceptanceTactic::OwnNextBidUtility => {
            let bid = state.own_next_bid.as_ref().ok_or_else(|| {
                EngineError::Config("own next bid is required by U(next_own)".into())
            })?;
            utility(own, bid)
        }
        AcceptanceTactic::QuantileConcession { p } => {
            let utilities = state
                .opponent_history
                .iter()
                .map(|b| utility(own, b))
                .collect::<Result<Vec<_>, _>>()?;
            match empirical_quantile(&utilities, p.eval(state.t)) {
                Err(EngineError::EmptyHistory) => Ok(EMPTY_HISTORY_THRESHOLD),
                other => other,
            }
        }
        AcceptanceTactic::DynamicThreshold => Ok(state.dynamic_threshold),
        AcceptanceTactic::FixedThreshold { value } => Ok(value.unwrap_or(config.fixed_threshold)),
    }
}

/// Thresholds of the tactics selected in the phase containing `state.t`.
pub fn acceptance_thresholds(
    template: &StrategyTemplate,
    state: &AgentState,
    own: &UtilityModel,
    config: &TacticConfig,
) -> Result<Vec<(AcceptanceTactic, f64)>, EngineError> {
    let phase = template.phase_at(state.t);
    if !matches!(phase.rule, PhaseRule::Accept { .. }) {
        return Err(EngineError::WrongKind(template.name().to_string()));
    }
    phase
        .acceptance_tactics()
        .into_iter()
        .map(|tactic| {
            let u = tactic_threshold(&tactic, state, own, config)?;
            Ok((tactic, u))
        })
        .collect()
}

/// Accept iff `U(offer)` reaches the largest selected threshold.
pub fn evaluate_acceptance(
    template: &StrategyTemplate,
    state: &AgentState,
    offer: &Bid,
    own: &UtilityModel,
    config: &TacticConfig,
) -> Result<bool, EngineError> {
    let thresholds = acceptance_thresholds(template, state, own, config)?;
    let bar = thresholds
        .iter()
        .map(|(_, u)| *u)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(utility(own, offer)? >= bar)
}

pub(crate) fn check_enumerable(domain: &NegotiationDomain) -> Result<(), EngineError> {
    let outcomes = domain.outcome_count();
    if outcomes > ENUMERATION_CAP {
        return Err(EngineError::DomainTooLarge {
            outcomes,
            cap: ENUMERATION_CAP,
        });
    }
    Ok(())
}
