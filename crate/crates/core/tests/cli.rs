mod common;

use common::fixture;
use std::path::Path;
use std::process::Command;
use stratex::cli::run;

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn cli(args: &[&str]) -> Run {
    let mut argv = vec!["stratex"];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(argv, &mut out, &mut err);
    Run { code, out: String::from_utf8(out).unwrap(), err: String::from_utf8(err).unwrap() }
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn parse_prints_canonical_text_and_json() {
    let f = fixture("party.nst");
    let text = cli(&["parse", p(&f)]);
    assert_eq!(text.code, 0);
    assert!(text.out.contains("Q(-0.2*t + 0.22)") || text.out.contains("Q(-0.20*t + 0.22)"), "{}", text.out);

    let json = cli(&["parse", p(&f), "--format", "json", "--semantics"]);
    assert_eq!(json.code, 0);
    let v: serde_json::Value = serde_json::from_str(&json.out).unwrap();
    assert_eq!(v["template"]["phases"].as_array().unwrap().len(), 2);
    assert!(v.get("semantics").is_some());
}

#[test]
fn syntax_errors_carry_a_span() {
    let r = cli(&["parse", p(&fixture("broken.nst"))]);
    assert_eq!(r.code, 2);
    assert!(r.out.is_empty());
    assert!(r.err.contains("broken.nst:3:"), "{}", r.err);
    assert!(r.err.contains("syntax error"));
}

#[test]
fn usage_and_io_errors_exit_2() {
    let r = cli(&["explain", p(&fixture("party.nst"))]);
    assert_eq!(r.code, 2);
    assert!(r.err.contains("Usage"), "{}", r.err);
    assert_eq!(cli(&["frobnicate"]).code, 2);
    assert_eq!(cli(&["parse", "/no/such/file.nst"]).code, 2);
    let bad_b = cli(&["simulate", "--scenario", p(&fixture("party.json")), "--agent-b", "tit-for-tat"]);
    assert_eq!(bad_b.code, 2);
    let help = cli(&["--help"]);
    assert_eq!(help.code, 0);
    assert!(help.out.contains("simulate"));
}

#[test]
fn explain_writes_text_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let r = cli(&[
        "explain",
        p(&fixture("party.nst")),
        "--audience",
        "layperson",
        "--backend",
        "offline",
        "--report",
        p(&report),
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("3.61"));
    let rep: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(rep["passed"], true);
}

#[test]
fn explain_json_round_trips_through_validate() {
    let dir = tempfile::tempdir().unwrap();
    let template = fixture("grocery.nst");
    let r = cli(&["explain", p(&template), "--audience", "expert", "--format", "json"]);
    assert_eq!(r.code, 0);
    let doc: serde_json::Value = serde_json::from_str(&r.out).unwrap();
    assert_eq!(doc["metadata"]["fixed_threshold"], 0.6);
    let good = dir.path().join("good.json");
    std::fs::write(&good, &r.out).unwrap();
    let ok = cli(&["validate", p(&good), "--against", p(&template)]);
    assert_eq!(ok.code, 0, "{}", ok.out);
    assert!(ok.out.trim_end().ends_with("valid"));

    // A bare explanation with a constant removed fails.
    let mut expl = doc["explanation"].clone();
    let seg = expl["segments"]
        .as_array_mut()
        .unwrap()
        .iter_mut()
        .find(|s| s["phase"] == 1)
        .unwrap();
    let text = seg["text"].as_str().unwrap().replace("1.4", "");
    seg["text"] = text.into();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, expl.to_string()).unwrap();
    let r = cli(&["validate", p(&bad), "--against", p(&template), "--format", "json"]);
    assert_eq!(r.code, 1);
    let rep: serde_json::Value = serde_json::from_str(&r.out).unwrap();
    assert_eq!(rep["passed"], false);

    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(cli(&["validate", p(&bad), "--against", p(&template)]).code, 2);
}

#[test]
fn custom_rules_without_a_role_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let rules = dir.path().join("thin.rules");
    std::fs::write(&rules, "Header | h | h\n").unwrap();
    let r = cli(&["explain", p(&fixture("party.nst")), "--audience", "expert", "--rules", p(&rules)]);
    assert_eq!(r.code, 2);
    assert!(r.err.contains("thin.rules"));
}

#[test]
fn simulate_is_deterministic_and_parseable() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = fixture("party.json");
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    for out in [&a, &b] {
        let r = cli(&["simulate", "--scenario", p(&scenario), "--deadline", "60", "--seed", "7", "--out", p(out)]);
        assert_eq!(r.code, 0, "{}", r.err);
        assert!(r.out.is_empty());
        assert!(r.err.contains("agreement"));
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    for line in String::from_utf8(bytes).unwrap().lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["round"].is_u64() && v["t"].is_f64());
    }

    let json = cli(&["simulate", "--scenario", p(&scenario), "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&json.out).unwrap();
    assert_eq!(v["seed"], 7);
    assert!(v["transcript"].as_array().unwrap().len() >= 2);
}

#[test]
fn simulate_with_template_agent() {
    let r = cli(&[
        "simulate",
        "--scenario",
        p(&fixture("grocery.json")),
        "--agent-b",
        &format!("template:{}", p(&fixture("party_bidding.nst"))),
        "--deadline",
        "30",
        "--seed",
        "1",
        "--format",
        "json",
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    let v: serde_json::Value = serde_json::from_str(&r.out).unwrap();
    assert_eq!(v["deadline"], 30);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_stratex");
    let ok = Command::new(bin)
        .args(["explain", p(&fixture("party.nst")), "--audience", "layperson", "--backend", "offline"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("3.61"));
    let bad = Command::new(bin).args(["parse", p(&fixture("broken.nst"))]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("broken.nst:3:"));
}
