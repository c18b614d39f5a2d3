mod common;

use common::*;
use proptest::prelude::*;
use stratex::domain::{AgentState, BidScore};
use stratex::engine::{
    boulware_target, empirical_quantile, pareto_front, run_session, topsis_select, AgentSpec,
    OpponentModel, SessionConfig, TacticConfig,
};
use stratex::engine::session::default_bidding;
use stratex::validation::scan_numerals;
use stratex::{
    annotate, customize, enrich, parse_template, realize, validate, Audience, OfflineBackend,
    RuleSet,
};

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn pretty_print_round_trips(t in template()) {
        let printed = t.pretty_print();
        let back = parse_template(&printed).unwrap();
        prop_assert_eq!(&back, &t);
        prop_assert_eq!(back.pretty_print(), printed);
    }

    #[test]
    fn parsing_is_deterministic(t in template()) {
        let src = t.pretty_print();
        prop_assert_eq!(parse_template(&src).unwrap(), parse_template(&src).unwrap());
    }

    #[test]
    fn phase_lookup_covers_time(t in template(), x in 0.0f64..=1.0) {
        let i = t.phase_index_at(x);
        let p = &t.phases()[i];
        prop_assert!(p.start <= x);
        prop_assert!(x < p.end || (p.end == 1.0 && x == 1.0));
    }

    #[test]
    fn rule_based_explanations_validate(t in template()) {
        let semrep = annotate(&t).unwrap();
        let e = realize(&t, &semrep, &RuleSet::default_rules()).unwrap();
        for audience in [Audience::Expert, Audience::Layperson] {
            let c = customize(&e, audience);
            prop_assert_eq!(&customize(&c, audience), &c);
            let report = validate(&c, &t);
            prop_assert!(report.passed, "{:?}\n{}", report.failing().collect::<Vec<_>>(), c.text());
        }
    }

    #[test]
    fn offline_enrichment_keeps_numerals(t in template()) {
        let semrep = annotate(&t).unwrap();
        let e = realize(&t, &semrep, &RuleSet::default_rules()).unwrap();
        let out = enrich(&e, &semrep, &OfflineBackend::default()).explanation;
        for (a, b) in out.segments.iter().zip(&e.segments) {
            for audience in [Audience::Expert, Audience::Layperson] {
                let after: Vec<String> = scan_numerals(a.variants.get(audience)).into_iter().map(|n| n.text).collect();
                for n in scan_numerals(b.variants.get(audience)) {
                    prop_assert!(after.contains(&n.text), "lost {}", n.text);
                }
            }
        }
    }

    #[test]
    fn quantile_is_a_member_and_monotone(
        values in proptest::collection::vec(0.0f64..=1.0, 1..30),
        p in -1.0f64..2.0,
        q in -1.0f64..2.0,
    ) {
        let a = empirical_quantile(&values, p).unwrap();
        prop_assert!(values.contains(&a));
        prop_assert_eq!(Some(a), oracle_quantile(&values, p));
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        prop_assert!(empirical_quantile(&values, lo).unwrap() >= empirical_quantile(&values, hi).unwrap());
    }

    #[test]
    fn boulware_concedes_monotonically(
        e in 0.01f64..5.0,
        lo in 0.0f64..0.9,
        gap in 0.01f64..0.1,
        t1 in 0.0f64..=1.0,
        t2 in 0.0f64..=1.0,
    ) {
        let hi = (lo + gap).min(1.0);
        let (a, b) = (boulware_target(t1.min(t2), e, lo, hi), boulware_target(t1.max(t2), e, lo, hi));
        prop_assert!(a >= b);
        prop_assert!((lo - 1e-12..=hi + 1e-12).contains(&a));
    }

    #[test]
    fn utility_matches_oracle((d, u, bid) in small_domain(5, 5).prop_flat_map(|d| (Just(d.clone()), utility_for(&d), bid_in(&d)))) {
        let _ = d;
        prop_assert_eq!(u.utility(&bid).unwrap(), oracle_utility(&u, &bid));
        prop_assert!((u.utility(&u.best_bid()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fronts_match_oracle_and_topsis_stays_on_them(
        (d, own, opp, w) in small_domain(3, 5).prop_flat_map(|d| (Just(d.clone()), utility_for(&d), utility_for(&d), 0.0f64..=1.0))
    ) {
        let points: Vec<_> = d.bids().map(|b| (own.score(&b), opp.score(&b), b)).collect();
        let front = pareto_front(&d, &own, &opp).unwrap();
        prop_assert_eq!(&front, &oracle_front(&points));
        let pick = topsis_select(&front, w, &own, &opp).unwrap();
        prop_assert!(front.contains(&pick));
    }

    #[test]
    fn opponent_weights_are_a_distribution(
        (d, history) in small_domain(4, 4).prop_flat_map(|d| (Just(d.clone()), proptest::collection::vec(bid_in(&d), 0..12)))
    ) {
        let m = OpponentModel::from_history(&d, &history);
        let w = m.issue_weights();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(w.iter().all(|x| *x >= 0.0));
        for b in d.bids() {
            prop_assert!((0.0..=1.0).contains(&m.estimated_utility(&b)));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 40, ..ProptestConfig::default() })]

    #[test]
    fn sessions_are_deterministic_and_consistent(
        (d, ua, ub, ta, tb) in small_domain(3, 4).prop_flat_map(|d| (
            Just(d.clone()), utility_for(&d), utility_for(&d), acceptance_template(), acceptance_template(),
        )),
        seed in any::<u64>(),
        deadline in 1u32..30,
    ) {
        let a = AgentSpec::new("A", ua, ta, default_bidding(), TacticConfig::default()).unwrap();
        let b = AgentSpec::new("B", ub, tb, default_bidding(), TacticConfig::default()).unwrap();
        let config = SessionConfig { deadline, seed };
        let x = run_session(&d, &a, &b, config).unwrap();
        let y = run_session(&d, &a, &b, config).unwrap();
        prop_assert_eq!(x.transcript_jsonl(), y.transcript_jsonl());
        prop_assert!(x.transcript.len() <= 2 * deadline as usize);
        match (&x.agreement, &x.acceptance) {
            (Some(agreement), Some(record)) => {
                let spec = if record.actor == stratex::engine::Actor::A { &a } else { &b };
                let state: &AgentState = &record.state;
                prop_assert!(stratex::engine::evaluate_acceptance(&spec.acceptance, state, &record.offer, &spec.utility, &spec.config).unwrap());
                prop_assert_eq!(&agreement.bid, &record.offer);
            }
            (None, None) => prop_assert_eq!((x.utility_a, x.utility_b), (0.0, 0.0)),
            _ => prop_assert!(false, "agreement and acceptance record disagree"),
        }
    }
}
