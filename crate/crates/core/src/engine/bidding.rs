use super::{check_enumerable, pareto_front, topsis_select, EngineError, TacticConfig};
use crate::domain::{AgentState, Bid, BidScore, NegotiationDomain, UtilityModel};
use crate::template::{BiddingTactic, BoulwareParams, PhaseRule, StrategyTemplate};
use rand::Rng;

/// `u_min + (u_max − u_min)·(1 − t^{1/e})`.
pub fn boulware_target(t: f64, e: f64, u_min: f64, u_max: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    u_min + (u_max - u_min) * (1.0 - t.powf(1.0 / e))
}

fn utility_of(own: &UtilityModel, bid: &Bid) -> f64 {
    own.utility(bid).unwrap_or(0.0)
}

/// Bid with the smallest utility at or above `target`, else the best bid.
/// Ties go to the smaller bid.
pub fn boulware_bid(
    domain: &NegotiationDomain,
    own: &UtilityModel,
    target: f64,
) -> Result<Bid, EngineError> {
    check_enumerable(domain)?;
    let mut above: Option<(f64, Bid)> = None;
    let mut best: Option<(f64, Bid)> = None;
    for bid in domain.bids() {
        let u = utility_of(own, &bid);
        if u >= target && above.as_ref().is_none_or(|(a, _)| u < *a) {
            above = Some((u, bid.clone()));
        }
        if best.as_ref().is_none_or(|(b, _)| u > *b) {
            best = Some((u, bid));
        }
    }
    above
        .or(best)
        .map(|(_, b)| b)
        .ok_or_else(|| EngineError::Config("empty outcome space".into()))
}

/// `last` with the value of its lowest-weight issue redrawn uniformly among
/// the other values. Weight ties go to the lower issue index.
pub fn opponent_greedy(
    domain: &NegotiationDomain,
    last: &Bid,
    own: &UtilityModel,
    rng: &mut impl Rng,
) -> Result<Bid, EngineError> {
    domain.check_bid(last)?;
    let weights = own.weights();
    let mut issue = 0;
    for (i, w) in weights.iter().enumerate() {
        if *w < weights[issue] {
            issue = i;
        }
    }
    let n = domain.value_counts()[issue];
    let current = last.values()[issue];
    let mut pick = rng.gen_range(0..n - 1);
    if pick >= current {
        pick += 1;
    }
    let mut out = last.clone();
    out.0[issue] = pick;
    Ok(out)
}

/// Uniform draw from the bids with own utility at least `threshold`, in bid
/// order; the best bid when that set is empty.
pub fn random_above_threshold(
    domain: &NegotiationDomain,
    own: &UtilityModel,
    threshold: f64,
    rng: &mut impl Rng,
) -> Result<Bid, EngineError> {
    check_enumerable(domain)?;
    let eligible: Vec<Bid> = domain
        .bids()
        .filter(|b| utility_of(own, b) >= threshold)
        .collect();
    if eligible.is_empty() {
        return boulware_bid(domain, own, f64::INFINITY);
    }
    Ok(eligible[rng.gen_range(0..eligible.len())].clone())
}

/// What bidding tactics may consult besides the agent state.
pub struct BiddingContext<'a> {
    pub domain: &'a NegotiationDomain,
    pub own: &'a UtilityModel,
    /// Opponent utility used for Pareto computations.
    pub opponent: &'a dyn BidScore,
    pub config: &'a TacticConfig,
}

fn boulware(ctx: &BiddingContext<'_>, params: BoulwareParams, t: f64) -> Result<Bid, EngineError> {
    let target = boulware_target(t, params.e, params.u_min, params.u_max);
    boulware_bid(ctx.domain, ctx.own, target)
}

/// Run the first selected tactic of the phase containing `state.t`.
pub fn select_bid(
    template: &StrategyTemplate,
    state: &AgentState,
    ctx: &BiddingContext<'_>,
    rng: &mut impl Rng,
) -> Result<Bid, EngineError> {
    let phase = template.phase_at(state.t);
    if !matches!(phase.rule, PhaseRule::Bid { .. }) {
        return Err(EngineError::WrongKind(template.name().to_string()));
    }
    let tactic = phase
        .primary_bid_tactic()
        .ok_or_else(|| EngineError::Config("phase has no selected tactic".into()))?;
    match tactic {
        BiddingTactic::Boulware { params } => {
            boulware(ctx, params.unwrap_or(ctx.config.boulware), state.t)
        }
        BiddingTactic::ParetoWeighted { weight } => {
            let front = pareto_front(ctx.domain, ctx.own, ctx.opponent)?;
            topsis_select(&front, weight.eval(state.t), ctx.own, ctx.opponent)
                .ok_or_else(|| EngineError::Config("empty Pareto front".into()))
        }
        BiddingTactic::OpponentGreedy => match state.opponent_history.last() {
            Some(last) => opponent_greedy(ctx.domain, last, ctx.own, rng),
            None => boulware(ctx, ctx.config.boulware, state.t),
        },
        BiddingTactic::RandomAboveThreshold => {
            random_above_threshold(ctx.domain, ctx.own, state.dynamic_threshold, rng)
        }
    }
}
