//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints exactly one PASS or FAIL line.

mod common;

use common::*;
use proptest::strategy::{Just, Strategy, ValueTree};
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};
use stratex::domain::{AgentState, BidScore};
use stratex::engine::{
    empirical_quantile, evaluate_acceptance, pareto_front, run_session, topsis_select, Actor,
    SessionConfig, TacticConfig,
};
use stratex::pipeline::Stage;
use stratex::scenario::load_scenario;
use stratex::template::{AcceptanceTactic, LinearTerm};
use stratex::validation::scan_numerals;
use stratex::{
    annotate, parse_template, refine, validate, Audience, Explainer, OfflineBackend, RuleSet,
    StrategyTemplate,
};

const PARSE_BUDGET: Duration = Duration::from_millis(10);
const PIPELINE_BUDGET: Duration = Duration::from_secs(1);
const PARETO_BUDGET: Duration = Duration::from_secs(5);
const SESSION_BUDGET: Duration = Duration::from_secs(2);
const BOUNDARY_TOL: f64 = 1e-12;
const MAX_REFINE_ROUNDS: usize = 2;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config { cases, failure_persistence: None, ..Config::default() },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

/// Draw `n` values from `strategy` with a fixed seed.
fn samples<S: Strategy>(strategy: S, n: usize) -> Vec<S::Value> {
    let mut r = runner(n as u32);
    (0..n).map(|_| strategy.new_tree(&mut r).unwrap().current()).collect()
}

fn timed_parse(name: &str) -> Result<(StrategyTemplate, Duration), String> {
    let src = read_fixture(name);
    let start = Instant::now();
    let t = parse_template(&src).map_err(|e| e.to_string())?;
    Ok((t, start.elapsed()))
}

fn quantile_params(t: &StrategyTemplate) -> Vec<Vec<(f64, f64)>> {
    t.phases()
        .iter()
        .map(|p| {
            p.acceptance_tactics()
                .into_iter()
                .filter_map(|tac| match tac {
                    AcceptanceTactic::QuantileConcession { p } => Some((p.slope(), p.intercept())),
                    _ => None,
                })
                .collect()
        })
        .collect()
}

fn golden(name: &str, cuts: &[f64], params: &[(f64, f64)]) -> Outcome {
    let (t, elapsed) = timed_parse(name)?;
    ensure!(t.phases().len() == cuts.len() - 1, "{} phases", t.phases().len());
    for (i, p) in t.phases().iter().enumerate() {
        ensure!(
            (p.start - cuts[i]).abs() < BOUNDARY_TOL && (p.end - cuts[i + 1]).abs() < BOUNDARY_TOL,
            "phase {i} spans [{}, {}]",
            p.start,
            p.end
        );
    }
    let found: Vec<(f64, f64)> = quantile_params(&t).into_iter().flatten().collect();
    ensure!(found == params, "quantile parameters {found:?}");
    ensure!(elapsed < PARSE_BUDGET, "parse took {elapsed:?}");
    Ok(format!("{} phases, parsed in {elapsed:?}", t.phases().len()))
}

fn golden_party() -> Outcome {
    golden("party.nst", &[0.0, 0.0361, 1.0], &[(-0.20, 0.22), (-0.10, 0.64)])
}

fn golden_grocery() -> Outcome {
    golden(
        "grocery.nst",
        &[0.0, 0.2164, 0.3379, 1.0],
        &[(-0.55, 0.05), (-0.60, 1.40), (-0.22, 0.29)],
    )
}

fn round_trip() -> Outcome {
    let templates = samples(template(), 500);
    let mut failures = 0;
    for t in &templates {
        let printed = t.pretty_print();
        match parse_template(&printed) {
            Ok(back) if &back == t => {}
            _ => failures += 1,
        }
    }
    ensure!(failures == 0, "{failures} of {} templates changed", templates.len());
    Ok(format!("{} templates, 0 failures", templates.len()))
}

fn pipeline_reproduction() -> Outcome {
    let start = Instant::now();
    let mut out = Vec::new();
    let mut err = Vec::new();
    let path = fixture("party.nst");
    let code = stratex::cli::run(
        [
            "stratex",
            "explain",
            path.to_str().unwrap(),
            "--audience",
            "layperson",
            "--backend",
            "offline",
            "--format",
            "json",
        ],
        &mut out,
        &mut err,
    );
    let elapsed = start.elapsed();
    ensure!(code == 0, "exit {code}: {}", String::from_utf8_lossy(&err));
    let doc: serde_json::Value = serde_json::from_slice(&out).map_err(|e| e.to_string())?;
    ensure!(doc["report"]["passed"] == true, "report not all-pass");
    let segments = doc["explanation"]["segments"].as_array().ok_or("no segments")?;
    let text_of = |phase: u64| {
        segments
            .iter()
            .find(|s| s["phase"] == phase)
            .and_then(|s| s["text"].as_str())
            .unwrap_or_default()
            .to_string()
    };
    let (first, second) = (text_of(0), text_of(1));
    ensure!(first.contains("3.61"), "phase 1 lacks 3.61: {first}");
    ensure!(
        ["larger", "greater"].iter().any(|w| second.contains(w)),
        "phase 2 lacks a larger/greater phrase: {second}"
    );
    ensure!(elapsed < PIPELINE_BUDGET, "took {elapsed:?}");
    Ok(format!("validated, {elapsed:?}"))
}

fn stage_order() -> Outcome {
    let backend = OfflineBackend::default();
    let mut stages = Vec::new();
    Explainer::new(&backend)
        .explain_source(&read_fixture("party.nst"), Audience::Layperson, &mut stages)
        .map_err(|e| e.to_string())?;
    let expected = [
        Stage::Parse,
        Stage::Semantics,
        Stage::Realize,
        Stage::Enrich,
        Stage::Customize,
        Stage::Validate,
    ];
    ensure!(stages == expected, "observed {stages:?}");
    Ok("P S R T C V".into())
}

fn oracle_threshold(tactic: &AcceptanceTactic, state: &AgentState, own: &stratex::UtilityModel, cfg: &TacticConfig) -> f64 {
    match tactic {
        AcceptanceTactic::OwnNextBidUtility => oracle_utility(own, state.own_next_bid.as_ref().unwrap()),
        AcceptanceTactic::QuantileConcession { p } => {
            let received: Vec<f64> = state.opponent_history.iter().map(|b| oracle_utility(own, b)).collect();
            oracle_quantile(&received, p.eval(state.t)).unwrap_or(1.0)
        }
        AcceptanceTactic::DynamicThreshold => state.dynamic_threshold,
        AcceptanceTactic::FixedThreshold { value } => value.unwrap_or(cfg.fixed_threshold),
    }
}

fn acceptance_equivalence() -> Outcome {
    let case = small_domain(4, 4).prop_flat_map(|d| {
        let bid = bid_in(&d);
        (
            acceptance_template(),
            utility_for(&d),
            0..=1000u32,
            bid.clone(),
            proptest::collection::vec(bid.clone(), 0..8),
            0..=100u32,
            0..=100u32,
            bid,
        )
    });
    let trials = samples(case, 1000);
    let mut discrepancies = 0;
    for (template, own, t, next, history, dynamic, fixed, offer) in trials {
        let state = AgentState {
            t: t as f64 / 1000.0,
            own_next_bid: Some(next),
            opponent_history: history,
            dynamic_threshold: dynamic as f64 / 100.0,
        };
        let cfg = TacticConfig { fixed_threshold: fixed as f64 / 100.0, ..TacticConfig::default() };
        let u = oracle_utility(&own, &offer);
        let conjunction = template
            .phase_at(state.t)
            .acceptance_tactics()
            .iter()
            .all(|tac| u >= oracle_threshold(tac, &state, &own, &cfg));
        let engine = evaluate_acceptance(&template, &state, &offer, &own, &cfg).map_err(|e| e.to_string())?;
        if engine != conjunction {
            discrepancies += 1;
        }
    }
    ensure!(discrepancies == 0, "{discrepancies} discrepancies");
    Ok("1000 trials, 0 discrepancies".into())
}

fn quantile_oracle() -> Outcome {
    let case = (
        proptest::collection::vec((0..=1000u32).prop_map(|x| x as f64 / 1000.0), 1..40),
        (-500..=1500i32).prop_map(|x| x as f64 / 1000.0),
    );
    let cases = samples(case, 1000);
    let clamped = cases.iter().filter(|(_, p)| !(0.0..=1.0).contains(p)).count();
    let mut mismatches = 0;
    for (values, p) in &cases {
        if empirical_quantile(values, *p).ok() != oracle_quantile(values, *p) {
            mismatches += 1;
        }
    }
    // Grocery phase 2 at its start: p = -0.60·t + 1.40 lies above 1.
    let grocery = LinearTerm::affine(-0.60, 1.40).eval(0.2164);
    let sample = [0.3, 0.9, 0.5];
    ensure!(grocery > 1.0, "grocery level {grocery} not clamped");
    ensure!(empirical_quantile(&sample, grocery).unwrap() == 0.3, "grocery clamp case");
    ensure!(clamped > 0, "no clamped cases generated");
    ensure!(mismatches == 0, "{mismatches} mismatches");
    Ok(format!("1000 cases ({clamped} clamped), 0 mismatches"))
}

fn pareto_oracle() -> Outcome {
    let mut details = Vec::new();
    for name in ["party.json", "grocery.json"] {
        let s = load_scenario(&fixture(name)).map_err(|e| e.to_string())?;
        let start = Instant::now();
        let front = pareto_front(&s.domain, &s.utility_a, &s.utility_b).map_err(|e| e.to_string())?;
        let elapsed = start.elapsed();
        let points: Vec<_> = s
            .domain
            .bids()
            .map(|b| (oracle_utility(&s.utility_a, &b), oracle_utility(&s.utility_b, &b), b))
            .collect();
        let expected = oracle_front(&points);
        ensure!(front == expected, "{name}: {} vs oracle {}", front.len(), expected.len());
        ensure!(elapsed < PARETO_BUDGET, "{name}: took {elapsed:?}");
        details.push(format!("{name} {} outcomes, front {} in {elapsed:?}", points.len(), front.len()));
    }
    Ok(details.join("; "))
}

fn topsis_extremes() -> Outcome {
    let case = small_domain(3, 5).prop_flat_map(|d| (Just(d.clone()), utility_for(&d), utility_for(&d), 0..=100u32));
    let cases = samples(case, 1000);
    let mut failures = 0;
    for (domain, own, opp, w) in &cases {
        let front = pareto_front(domain, own, opp).map_err(|e| e.to_string())?;
        let max_own = front.iter().map(|b| own.score(b)).fold(f64::NEG_INFINITY, f64::max);
        let max_opp = front.iter().map(|b| opp.score(b)).fold(f64::NEG_INFINITY, f64::max);
        let hi = topsis_select(&front, 1.0, own, opp);
        let lo = topsis_select(&front, 0.0, own, opp);
        let mid = topsis_select(&front, *w as f64 / 100.0, own, opp);
        let ok = hi.as_ref().is_some_and(|b| own.score(b) == max_own && front.contains(b))
            && lo.as_ref().is_some_and(|b| opp.score(b) == max_opp && front.contains(b))
            && mid.as_ref().is_some_and(|b| front.contains(b));
        if !ok {
            failures += 1;
        }
    }
    ensure!(failures == 0, "{failures} failing fronts");
    Ok("1000 fronts, 0 failures".into())
}

fn simulate_cli(out: &std::path::Path) -> Result<(), String> {
    let scenario = fixture("party.json");
    let mut stdout = Vec::new();
    let mut stderr = Vec::new();
    let code = stratex::cli::run(
        [
            "stratex",
            "simulate",
            "--scenario",
            scenario.to_str().unwrap(),
            "--deadline",
            "60",
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ],
        &mut stdout,
        &mut stderr,
    );
    ensure!(code == 0, "simulate exit {code}: {}", String::from_utf8_lossy(&stderr));
    Ok(())
}

fn simulation() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (p1, p2) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    simulate_cli(&p1)?;
    simulate_cli(&p2)?;
    let (a, b) = (std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    ensure!(!a.is_empty() && a == b, "transcripts differ");

    let mut replayed = 0;
    let mut party_time = Duration::ZERO;
    for name in ["party.json", "grocery.json"] {
        let s = load_scenario(&fixture(name)).map_err(|e| e.to_string())?;
        let (agent_a, agent_b) = (s.agent_a().map_err(|e| e.to_string())?, s.agent_b(None));
        for seed in 0..5 {
            let start = Instant::now();
            let outcome = run_session(&s.domain, &agent_a, &agent_b, SessionConfig { deadline: 60, seed })
                .map_err(|e| e.to_string())?;
            if name == "party.json" {
                party_time = party_time.max(start.elapsed());
            }
            let (Some(agreement), Some(record)) = (&outcome.agreement, &outcome.acceptance) else {
                continue;
            };
            let spec = match record.actor {
                Actor::A => &agent_a,
                Actor::B => &agent_b,
            };
            let accepted = evaluate_acceptance(&spec.acceptance, &record.state, &record.offer, &spec.utility, &spec.config)
                .map_err(|e| e.to_string())?;
            ensure!(accepted, "{name} seed {seed}: replay rejects the agreement");
            ensure!(record.offer == agreement.bid, "{name} seed {seed}: record and agreement differ");
            replayed += 1;
        }
    }
    ensure!(replayed > 0, "no session reached agreement");
    ensure!(party_time < SESSION_BUDGET, "party session took {party_time:?}");
    Ok(format!("byte-identical, {replayed} agreements replayed, party session {party_time:?}"))
}

/// Remove every numeral in `text` that renders `value`.
fn delete_rendering(text: &str, value: f64) -> String {
    let mut out = text.to_string();
    for n in scan_numerals(text) {
        let hit = if n.percent {
            (n.value - value * 100.0).abs() <= 0.0051
        } else {
            (n.value - value).abs() <= 0.0051
        };
        if hit {
            out = out.replace(&n.text, "");
        }
    }
    out
}

fn fault_injection() -> Outcome {
    let backend = OfflineBackend::default();
    let explainer = Explainer::new(&backend);
    let rules = RuleSet::default_rules();
    let mut injected = 0;
    for name in ["party.nst", "grocery.nst", "party_bidding.nst"] {
        let template = parse_template(&read_fixture(name)).map_err(|e| e.to_string())?;
        annotate(&template).map_err(|e| e.to_string())?;
        for audience in [Audience::Expert, Audience::Layperson] {
            let clean = explainer
                .explain_template(&template, audience, &mut ())
                .map_err(|e| format!("{name}: {e}"))?
                .explanation;
            for (i, seg) in clean.segments.iter().enumerate() {
                for c in template.constants().iter().filter(|c| seg.trace.contains(&c.node)) {
                    let mut broken = clean.clone();
                    broken.segments[i].text = delete_rendering(&seg.text, c.value);
                    let mut report = validate(&broken, &template);
                    ensure!(!report.passed, "{name} {audience}: deleting {} from segment {i} went unnoticed", c.value);
                    let mut rounds = 0;
                    while !report.passed && rounds < MAX_REFINE_ROUNDS {
                        broken = refine(&broken, &report, &template, &rules).map_err(|e| e.to_string())?;
                        report = validate(&broken, &template);
                        rounds += 1;
                    }
                    ensure!(report.passed, "{name} {audience}: segment {i} still invalid after {rounds} rounds");
                    injected += 1;
                }
            }
        }
    }
    Ok(format!("{injected} deletions detected and repaired"))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("golden parse (party)", golden_party),
        ("golden parse (grocery)", golden_grocery),
        ("round-trip property", round_trip),
        ("pipeline reproduction", pipeline_reproduction),
        ("stage ordering", stage_order),
        ("acceptance equivalence", acceptance_equivalence),
        ("quantile oracle", quantile_oracle),
        ("pareto oracle", pareto_oracle),
        ("topsis extremes", topsis_extremes),
        ("simulation determinism", simulation),
        ("validation fault injection", fault_injection),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(reason) => {
                failed += 1;
                println!("FAIL {name}: {reason}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
