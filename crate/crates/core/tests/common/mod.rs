//! Generators and oracles shared by the integration tests.
#![allow(dead_code)]

use proptest::prelude::*;
use std::path::PathBuf;
use stratex::domain::{Issue, UtilityModel};
use stratex::template::{
    AcceptanceTactic, BidChoice, BiddingTactic, BoulwareParams, LinearTerm, Phase, PhaseRule,
    ThresholdExpr,
};
use stratex::{Bid, NegotiationDomain, StrategyTemplate, TemplateKind};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

/// `k / scale` for `k` in `lo..=hi`.
fn grid(lo: i32, hi: i32, scale: f64) -> impl Strategy<Value = f64> {
    (lo..=hi).prop_map(move |k| k as f64 / scale)
}

pub fn linear_term() -> impl Strategy<Value = LinearTerm> {
    prop_oneof![
        grid(-150, 150, 100.0).prop_map(|value| LinearTerm::Constant { value }),
        (grid(-100, 100, 100.0), proptest::option::of(grid(-150, 150, 100.0)))
            .prop_map(|(slope, intercept)| LinearTerm::Affine { slope, intercept }),
    ]
}

pub fn acceptance_tactic() -> impl Strategy<Value = AcceptanceTactic> {
    prop_oneof![
        Just(AcceptanceTactic::OwnNextBidUtility),
        linear_term().prop_map(|p| AcceptanceTactic::QuantileConcession { p }),
        Just(AcceptanceTactic::DynamicThreshold),
        proptest::option::of(grid(0, 100, 100.0)).prop_map(|value| AcceptanceTactic::FixedThreshold { value }),
    ]
}

/// One to four tactics; several become a `max`, sometimes nested.
pub fn threshold() -> impl Strategy<Value = ThresholdExpr> {
    (proptest::collection::vec(acceptance_tactic(), 1..=4), any::<bool>()).prop_map(|(tactics, nest)| {
        let mut args: Vec<ThresholdExpr> = tactics.into_iter().map(ThresholdExpr::tactic).collect();
        match args.len() {
            1 => args.pop().unwrap(),
            n if nest && n >= 3 => {
                let tail = args.split_off(n - 2);
                args.push(ThresholdExpr::Max { args: tail });
                ThresholdExpr::Max { args }
            }
            _ => ThresholdExpr::Max { args },
        }
    })
}

pub fn bidding_tactic() -> impl Strategy<Value = BiddingTactic> {
    let boulware = proptest::option::of((1..=300i32, 0..=90i32, 1..=10i32).prop_map(|(e, lo, gap)| {
        let u_min = lo as f64 / 100.0;
        BoulwareParams {
            e: e as f64 / 100.0,
            u_min,
            u_max: ((lo + gap).min(100)) as f64 / 100.0,
        }
    }));
    prop_oneof![
        boulware.prop_map(|params| BiddingTactic::Boulware { params }),
        linear_term().prop_map(|weight| BiddingTactic::ParetoWeighted { weight }),
        Just(BiddingTactic::OpponentGreedy),
        Just(BiddingTactic::RandomAboveThreshold),
    ]
}

pub fn bid_choices() -> impl Strategy<Value = Vec<BidChoice>> {
    (proptest::collection::vec((bidding_tactic(), any::<bool>()), 1..=4), any::<prop::sample::Index>()).prop_map(
        |(raw, pick)| {
            let mut choices: Vec<BidChoice> =
                raw.into_iter().map(|(tactic, selected)| BidChoice { tactic, selected }).collect();
            if !choices.iter().any(|c| c.selected) {
                let i = pick.index(choices.len());
                choices[i].selected = true;
            }
            choices
        },
    )
}

/// Sorted distinct interior boundaries for `phases` phases.
fn boundaries(phases: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::btree_set(1..10_000u32, phases - 1)
        .prop_map(|set| set.into_iter().map(|k| k as f64 / 10_000.0).collect())
}

fn name() -> impl Strategy<Value = String> {
    prop_oneof![
        4 => "[a-z][a-z0-9_-]{0,10}",
        1 => "[a-z]{1,4}( [A-Z][a-z]{1,4})?\"[a-z]{0,3}",
    ]
}

pub fn template() -> impl Strategy<Value = StrategyTemplate> {
    (any::<bool>(), 1..=5usize, name())
        .prop_flat_map(|(acceptance, phases, name)| {
            let rules = if acceptance {
                proptest::collection::vec(threshold().prop_map(|threshold| PhaseRule::Accept { threshold }), phases)
                    .boxed()
            } else {
                proptest::collection::vec(bid_choices().prop_map(|choices| PhaseRule::Bid { choices }), phases)
                    .boxed()
            };
            (Just(acceptance), Just(name), boundaries(phases), rules)
        })
        .prop_map(|(acceptance, name, inner, rules)| {
            let mut cuts = vec![0.0];
            cuts.extend(inner);
            cuts.push(1.0);
            let phases = rules
                .into_iter()
                .enumerate()
                .map(|(i, rule)| Phase {
                    start: cuts[i],
                    end: cuts[i + 1],
                    rule,
                })
                .collect();
            let kind = if acceptance { TemplateKind::Acceptance } else { TemplateKind::Bidding };
            StrategyTemplate::new(kind, name, phases).expect("generated templates are well formed")
        })
}

pub fn acceptance_template() -> impl Strategy<Value = StrategyTemplate> {
    (1..=5usize, name())
        .prop_flat_map(|(phases, name)| {
            (
                Just(name),
                boundaries(phases),
                proptest::collection::vec(threshold().prop_map(|threshold| PhaseRule::Accept { threshold }), phases),
            )
        })
        .prop_map(|(name, inner, rules)| {
            let mut cuts = vec![0.0];
            cuts.extend(inner);
            cuts.push(1.0);
            let phases = rules
                .into_iter()
                .enumerate()
                .map(|(i, rule)| Phase { start: cuts[i], end: cuts[i + 1], rule })
                .collect();
            StrategyTemplate::new(TemplateKind::Acceptance, name, phases).unwrap()
        })
}

/// A small domain with `2..=max_issues` issues of `2..=max_values` values.
pub fn small_domain(max_issues: usize, max_values: usize) -> impl Strategy<Value = NegotiationDomain> {
    proptest::collection::vec(2..=max_values, 2..=max_issues).prop_map(|counts| {
        NegotiationDomain::new(
            counts
                .iter()
                .enumerate()
                .map(|(i, &n)| Issue {
                    name: format!("i{i}"),
                    values: (0..n).map(|v| format!("v{v}")).collect(),
                })
                .collect(),
        )
        .unwrap()
    })
}

/// A valid utility model for `domain` on a coarse grid, so ties occur.
pub fn utility_for(domain: &NegotiationDomain) -> impl Strategy<Value = UtilityModel> {
    let counts = domain.value_counts();
    let weights = proptest::collection::vec(1..=10u32, counts.len());
    let evals: Vec<_> = counts
        .iter()
        .map(|&n| (proptest::collection::vec(0..=10u32, n), 0..n))
        .collect();
    (weights, evals).prop_map(|(w, evals)| {
        let total: u32 = w.iter().sum();
        let mut weights: Vec<f64> = w.iter().map(|&x| x as f64 / total as f64).collect();
        let rest: f64 = weights[1..].iter().sum();
        weights[0] = 1.0 - rest;
        let evaluations = evals
            .into_iter()
            .map(|(raw, top)| {
                let mut row: Vec<f64> = raw.iter().map(|&x| x as f64 / 10.0).collect();
                row[top] = 1.0;
                row
            })
            .collect();
        UtilityModel::new(weights, evaluations).unwrap()
    })
}

pub fn bid_in(domain: &NegotiationDomain) -> impl Strategy<Value = Bid> + Clone {
    let ranges: Vec<_> = domain.value_counts().into_iter().map(|n| 0..n).collect();
    ranges.prop_map(Bid)
}

/// Linear-additive utility, summed in issue order.
pub fn oracle_utility(model: &UtilityModel, bid: &Bid) -> f64 {
    let mut total = 0.0;
    for (i, &v) in bid.values().iter().enumerate() {
        total += model.weights()[i] * model.evaluations()[i][v];
    }
    total.clamp(0.0, 1.0)
}

/// Nearest-rank quantile from the top, by ascending sort and indexing.
pub fn oracle_quantile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut asc = values.to_vec();
    asc.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = asc.len();
    let p = p.clamp(0.0, 1.0);
    let k = ((p * n as f64).ceil() as usize).clamp(1, n);
    Some(asc[n - k])
}

/// Bids not weakly dominated by any other bid, by pairwise comparison.
pub fn oracle_front(points: &[(f64, f64, Bid)]) -> Vec<Bid> {
    let mut out: Vec<Bid> = points
        .iter()
        .filter(|(a, b, _)| {
            !points
                .iter()
                .any(|(c, d, _)| c >= a && d >= b && (c > a || d > b))
        })
        .map(|(_, _, bid)| bid.clone())
        .collect();
    out.sort();
    out
}
