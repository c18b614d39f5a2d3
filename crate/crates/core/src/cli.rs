//! The `stratex` command line.

use crate::engine::{run_session, SessionConfig, SessionOutcome, DEFAULT_FIXED_THRESHOLD};
use crate::enrich::{OfflineBackend, PassthroughBackend, RefinementBackend, RemoteBackend};
use crate::parser::{parse_template, template_json};
use crate::pipeline::{ExplainError, Explainer};
use crate::realizer::{Audience, Explanation, RuleSet};
use crate::scenario::load_scenario;
use crate::semantic::annotate;
use crate::template::StrategyTemplate;
use crate::validation::validate;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "stratex", version, about = "Parse, simulate and explain negotiation strategy templates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendChoice {
    Offline,
    Passthrough,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AudienceArg {
    Expert,
    Layperson,
}

impl From<AudienceArg> for Audience {
    fn from(a: AudienceArg) -> Self {
        match a {
            AudienceArg::Expert => Audience::Expert,
            AudienceArg::Layperson => Audience::Layperson,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a template and print it in canonical form.
    Parse {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Include the semantic role of every node (JSON only).
        #[arg(long)]
        semantics: bool,
    },
    /// Explain a template for an audience.
    Explain {
        file: PathBuf,
        #[arg(long, value_enum)]
        audience: AudienceArg,
        #[arg(long, value_enum, default_value = "offline")]
        backend: BackendChoice,
        /// Write the validation report as JSON to this path.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Rule file replacing the built-in rules.
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Value of `u` recorded in the output metadata.
        #[arg(long, default_value_t = DEFAULT_FIXED_THRESHOLD)]
        fixed_threshold: f64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Run a negotiation session from a scenario file.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// `boulware`, or `template:<file>` to replace one of the builtin
        /// agent's templates.
        #[arg(long, default_value = "boulware")]
        agent_b: String,
        #[arg(long)]
        deadline: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the transcript as JSON lines to this path.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Check an explanation JSON file against its template.
    Validate {
        explanation: PathBuf,
        #[arg(long)]
        against: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

/// An error that ends the command with a diagnostic and exit code.
struct Failure {
    code: i32,
    message: String,
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.into(),
    }
}

/// Run the command line `args` (program name first), writing results to
/// `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{rendered}");
                EXIT_INPUT
            } else {
                let _ = write!(out, "{rendered}");
                EXIT_OK
            };
        }
    };
    let result = match cli.command {
        Command::Parse {
            file,
            format,
            semantics,
        } => cmd_parse(&file, format, semantics, out),
        Command::Explain {
            file,
            audience,
            backend,
            report,
            rules,
            fixed_threshold,
            format,
        } => cmd_explain(
            &file,
            audience.into(),
            backend,
            report.as_deref(),
            rules.as_deref(),
            fixed_threshold,
            format,
            out,
        ),
        Command::Simulate {
            scenario,
            agent_b,
            deadline,
            seed,
            out: out_path,
            format,
        } => cmd_simulate(&scenario, &agent_b, deadline, seed, out_path.as_deref(), format, out, err),
        Command::Validate {
            explanation,
            against,
            format,
        } => cmd_validate(&explanation, &against, format, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn load_template(path: &Path) -> Result<StrategyTemplate, Failure> {
    let text = read(path)?;
    parse_template(&text).map_err(|e| input_error(format!("{}:{e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output serializes")
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    writeln!(out, "{text}").map_err(|e| input_error(format!("cannot write output: {e}")))
}

fn cmd_parse(path: &Path, format: Format, semantics: bool, out: &mut dyn Write) -> Result<i32, Failure> {
    let template = load_template(path)?;
    match format {
        Format::Text => emit(out, template.pretty_print().trim_end())?,
        Format::Json => {
            let mut doc = json!({ "template": template_json(&template) });
            if semantics {
                let rep = annotate(&template).map_err(|e| input_error(e.to_string()))?;
                doc["semantics"] = serde_json::to_value(&rep).expect("roles serialize");
            }
            emit(out, &to_json(&doc))?;
        }
    }
    Ok(EXIT_OK)
}

fn backend_for(choice: BackendChoice) -> Result<Box<dyn RefinementBackend>, Failure> {
    Ok(match choice {
        BackendChoice::Offline => Box::new(OfflineBackend::default()),
        BackendChoice::Passthrough => Box::new(PassthroughBackend),
        BackendChoice::Remote => {
            Box::new(RemoteBackend::from_env().map_err(|e| input_error(e.to_string()))?)
        }
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_explain(
    path: &Path,
    audience: Audience,
    backend: BackendChoice,
    report_path: Option<&Path>,
    rules_path: Option<&Path>,
    fixed_threshold: f64,
    format: Format,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    if !(0.0..=1.0).contains(&fixed_threshold) {
        return Err(input_error("--fixed-threshold must lie in [0, 1]"));
    }
    let template = load_template(path)?;
    let backend = backend_for(backend)?;
    let mut explainer = Explainer::new(backend.as_ref());
    if let Some(p) = rules_path {
        let rules = RuleSet::parse(&read(p)?)
            .map_err(|e| input_error(format!("{}: {e}", p.display())))?;
        explainer = explainer.with_rules(rules);
    }
    let result = match explainer.explain_template(&template, audience, &mut ()) {
        Ok(v) => v,
        Err(ExplainError::ValidationExhausted { rounds, report }) => {
            if let Some(p) = report_path {
                write_file(p, &to_json(&report))?;
            }
            return Err(Failure {
                code: EXIT_INVALID,
                message: format!("explanation still invalid after {rounds} refinement round(s)"),
            });
        }
        Err(e) => return Err(input_error(e.to_string())),
    };
    if let Some(p) = report_path {
        write_file(p, &to_json(&result.report))?;
    }
    match format {
        Format::Text => emit(out, &result.explanation.text())?,
        Format::Json => {
            let doc = json!({
                "explanation": result.explanation,
                "report": result.report,
                "refinement_rounds": result.refinement_rounds,
                "warnings": result.warnings,
                "metadata": { "fixed_threshold": fixed_threshold },
            });
            emit(out, &to_json(&doc))?;
        }
    }
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    scenario_path: &Path,
    agent_b: &str,
    deadline: Option<u32>,
    seed: Option<u64>,
    out_path: Option<&Path>,
    format: Format,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, Failure> {
    let scenario = load_scenario(scenario_path)
        .map_err(|e| input_error(format!("{}: {e}", scenario_path.display())))?;
    let b_template = match agent_b {
        "boulware" => None,
        other => match other.strip_prefix("template:") {
            Some(file) => Some(load_template(Path::new(file))?),
            None => {
                return Err(input_error(format!(
                    "--agent-b must be `boulware` or `template:<file>`, got `{other}`"
                )))
            }
        },
    };
    let a = scenario.agent_a().map_err(|e| input_error(e.to_string()))?;
    let b = scenario.agent_b(b_template);
    let config = SessionConfig {
        deadline: deadline.unwrap_or(scenario.session.deadline),
        seed: seed.unwrap_or(scenario.session.seed),
    };
    let outcome = run_session(&scenario.domain, &a, &b, config)
        .map_err(|e| input_error(e.to_string()))?;
    let transcript = outcome.transcript_jsonl();
    if let Some(p) = out_path {
        write_file(p, &transcript)?;
    }
    match format {
        Format::Json => {
            let mut doc = summary(&scenario.name, config, &outcome);
            doc["transcript"] = serde_json::to_value(&outcome.transcript).expect("transcript serializes");
            emit(out, &to_json(&doc))?;
        }
        Format::Text => {
            if out_path.is_none() {
                write!(out, "{transcript}").map_err(|e| input_error(e.to_string()))?;
            }
            let _ = writeln!(err, "{}", summary_line(&outcome));
        }
    }
    Ok(EXIT_OK)
}

fn summary(name: &str, config: SessionConfig, outcome: &SessionOutcome) -> Value {
    json!({
        "scenario": name,
        "deadline": config.deadline,
        "seed": config.seed,
        "agreement": outcome.agreement,
        "utility_a": outcome.utility_a,
        "utility_b": outcome.utility_b,
        "actions": outcome.transcript.len(),
    })
}

fn summary_line(outcome: &SessionOutcome) -> String {
    match &outcome.agreement {
        Some(a) => format!(
            "agreement in round {} (t = {:.4}), accepted by {}: U_A = {:.4}, U_B = {:.4}",
            a.round, a.t, a.accepted_by, outcome.utility_a, outcome.utility_b
        ),
        None => "no agreement before the deadline".to_string(),
    }
}

fn cmd_validate(
    explanation_path: &Path,
    template_path: &Path,
    format: Format,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    let text = read(explanation_path)?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| input_error(format!("{}: {e}", explanation_path.display())))?;
    // Accept both a bare explanation and the output of `explain --format json`.
    let body = value.get("explanation").cloned().unwrap_or(value);
    let explanation: Explanation = serde_json::from_value(body)
        .map_err(|e| input_error(format!("{}: {e}", explanation_path.display())))?;
    let template = load_template(template_path)?;
    let report = validate(&explanation, &template);
    match format {
        Format::Json => emit(out, &to_json(&report))?,
        Format::Text => {
            for seg in &report.segments {
                let label = match seg.phase {
                    Some(p) => format!("phase {p}"),
                    None => "header".to_string(),
                };
                let status = if seg.passed() { "ok" } else { "FAIL" };
                let mut line = format!("segment {} ({label}): {status}", seg.index);
                if !seg.entity_coverage.passed {
                    let ids: Vec<String> = seg.entity_coverage.missing.iter().map(|n| n.to_string()).collect();
                    line.push_str(&format!("; unmentioned: {}", ids.join(", ")));
                }
                if !seg.numeric_round_trip.passed {
                    line.push_str(&format!("; missing numbers: {:?}", seg.numeric_round_trip.missing));
                }
                if !seg.no_foreign_numbers.passed {
                    line.push_str(&format!("; foreign numbers: {}", seg.no_foreign_numbers.foreign.join(", ")));
                }
                emit(out, &line)?;
            }
            emit(out, if report.passed { "valid" } else { "invalid" })?;
        }
    }
    Ok(if report.passed { EXIT_OK } else { EXIT_INVALID })
}
