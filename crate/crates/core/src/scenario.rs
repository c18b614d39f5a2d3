//! JSON scenario files: domain, both preference profiles, agent A's
//! templates and the engine parameters.

use crate::domain::{Issue, NegotiationDomain, UtilityModel};
use crate::engine::{
    builtin_boulware, session::default_bidding, AgentSpec, DynamicSchedule, SessionConfig,
    TacticConfig, DEFAULT_FIXED_THRESHOLD,
};
use crate::parser::parse_template;
use crate::template::{BoulwareParams, StrategyTemplate, TemplateKind};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// A problem in a scenario file, located by field path such as
/// `agent_a.profile.weights`.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{path}: {message}")]
pub struct ScenarioError {
    pub path: String,
    pub message: String,
}

impl ScenarioError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    #[serde(default)]
    #[allow(dead_code)]
    note: Option<String>,
    domain: RawDomain,
    agent_a: RawAgent,
    agent_b: RawAgent,
    #[serde(default)]
    dynamic_threshold: Option<Vec<(f64, f64)>>,
    #[serde(default)]
    fixed_threshold: Option<f64>,
    #[serde(default)]
    boulware: Option<BoulwareParams>,
    #[serde(default)]
    share_profiles: bool,
    #[serde(default = "default_deadline")]
    deadline: u32,
    #[serde(default)]
    seed: u64,
}

fn default_deadline() -> u32 {
    60
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    issues: Vec<Issue>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAgent {
    profile: RawProfile,
    #[serde(default)]
    acceptance: Option<PathBuf>,
    #[serde(default)]
    bidding: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    weights: BTreeMap<String, f64>,
    evaluations: BTreeMap<String, BTreeMap<String, f64>>,
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub domain: NegotiationDomain,
    pub utility_a: UtilityModel,
    pub utility_b: UtilityModel,
    pub acceptance_a: Option<StrategyTemplate>,
    pub bidding_a: Option<StrategyTemplate>,
    pub acceptance_b: Option<StrategyTemplate>,
    pub bidding_b: Option<StrategyTemplate>,
    pub tactics: TacticConfig,
    /// Let each agent use the other's true profile for Pareto computations.
    pub share_profiles: bool,
    pub session: SessionConfig,
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::new(path.display().to_string(), e.to_string()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_scenario(&text, base)
}

/// Parse scenario JSON; template paths resolve against `base`.
pub fn parse_scenario(text: &str, base: &Path) -> Result<Scenario, ScenarioError> {
    let raw: RawScenario = serde_json::from_str(text).map_err(|e| {
        ScenarioError::new("$", format!("{e}"))
    })?;
    let domain = NegotiationDomain::new(raw.domain.issues)
        .map_err(|e| ScenarioError::new("domain.issues", e.to_string()))?;
    let utility_a = profile(&domain, &raw.agent_a.profile, "agent_a.profile")?;
    let utility_b = profile(&domain, &raw.agent_b.profile, "agent_b.profile")?;

    let mut tactics = TacticConfig::default();
    if let Some(points) = raw.dynamic_threshold {
        tactics.dynamic_threshold = DynamicSchedule::new(points)
            .map_err(|e| ScenarioError::new("dynamic_threshold", e.to_string()))?;
    }
    let fixed = raw.fixed_threshold.unwrap_or(DEFAULT_FIXED_THRESHOLD);
    if !(0.0..=1.0).contains(&fixed) {
        return Err(ScenarioError::new("fixed_threshold", "must lie in [0, 1]"));
    }
    tactics.fixed_threshold = fixed;
    if let Some(b) = raw.boulware {
        if !(b.e > 0.0 && 0.0 <= b.u_min && b.u_min < b.u_max && b.u_max <= 1.0) {
            return Err(ScenarioError::new(
                "boulware",
                "need e > 0 and 0 <= u_min < u_max <= 1",
            ));
        }
        tactics.boulware = b;
    }
    if raw.deadline == 0 {
        return Err(ScenarioError::new("deadline", "must be at least 1"));
    }

    let load = |p: &Option<PathBuf>, field: &str, kind: TemplateKind| {
        p.as_ref()
            .map(|p| load_template(&base.join(p), field, kind))
            .transpose()
    };
    Ok(Scenario {
        name: raw.name,
        acceptance_a: load(&raw.agent_a.acceptance, "agent_a.acceptance", TemplateKind::Acceptance)?,
        bidding_a: load(&raw.agent_a.bidding, "agent_a.bidding", TemplateKind::Bidding)?,
        acceptance_b: load(&raw.agent_b.acceptance, "agent_b.acceptance", TemplateKind::Acceptance)?,
        bidding_b: load(&raw.agent_b.bidding, "agent_b.bidding", TemplateKind::Bidding)?,
        domain,
        utility_a,
        utility_b,
        tactics,
        share_profiles: raw.share_profiles,
        session: SessionConfig {
            deadline: raw.deadline,
            seed: raw.seed,
        },
    })
}

fn load_template(path: &Path, field: &str, kind: TemplateKind) -> Result<StrategyTemplate, ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::new(field, format!("{}: {e}", path.display())))?;
    let template = parse_template(&text)
        .map_err(|e| ScenarioError::new(field, format!("{}: {e}", path.display())))?;
    if template.kind() != kind {
        return Err(ScenarioError::new(
            field,
            format!("expected a {} template", kind.keyword()),
        ));
    }
    Ok(template)
}

fn profile(
    domain: &NegotiationDomain,
    raw: &RawProfile,
    field: &str,
) -> Result<UtilityModel, ScenarioError> {
    let mut weights = Vec::new();
    let mut evaluations = Vec::new();
    for issue in domain.issues() {
        let w = raw.weights.get(&issue.name).ok_or_else(|| {
            ScenarioError::new(format!("{field}.weights"), format!("no weight for issue `{}`", issue.name))
        })?;
        weights.push(*w);
        let evals = raw.evaluations.get(&issue.name).ok_or_else(|| {
            ScenarioError::new(
                format!("{field}.evaluations"),
                format!("no evaluations for issue `{}`", issue.name),
            )
        })?;
        let mut row = Vec::new();
        for value in &issue.values {
            let e = evals.get(value).ok_or_else(|| {
                ScenarioError::new(
                    format!("{field}.evaluations.{}", issue.name),
                    format!("no evaluation for value `{value}`"),
                )
            })?;
            row.push(*e);
        }
        evaluations.push(row);
    }
    for name in raw.weights.keys() {
        if !domain.issues().iter().any(|i| &i.name == name) {
            return Err(ScenarioError::new(format!("{field}.weights"), format!("unknown issue `{name}`")));
        }
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(ScenarioError::new(
            format!("{field}.weights"),
            format!("weights sum to {total}, expected 1"),
        ));
    }
    UtilityModel::new(weights, evaluations)
        .map_err(|e| ScenarioError::new(format!("{field}.evaluations"), e.to_string()))
}

impl Scenario {
    /// Agent A with its scenario templates; a missing bidding template means
    /// the Boulware tactic throughout.
    pub fn agent_a(&self) -> Result<AgentSpec, ScenarioError> {
        let acceptance = self
            .acceptance_a
            .clone()
            .ok_or_else(|| ScenarioError::new("agent_a.acceptance", "agent A needs an acceptance template"))?;
        let bidding = self.bidding_a.clone().unwrap_or_else(default_bidding);
        let mut spec = AgentSpec::new("A", self.utility_a.clone(), acceptance, bidding, self.tactics.clone())
            .map_err(|e| ScenarioError::new("agent_a", e.to_string()))?;
        if self.share_profiles {
            spec.opponent_utility = Some(self.utility_b.clone());
        }
        Ok(spec)
    }

    /// Agent B: the builtin Boulware agent, with any of its templates
    /// replaced by `template` or by those given in the scenario.
    pub fn agent_b(&self, template: Option<StrategyTemplate>) -> AgentSpec {
        let mut spec = builtin_boulware(self.utility_b.clone(), self.tactics.clone());
        spec.name = "B".into();
        if let Some(t) = &self.acceptance_b {
            spec.acceptance = t.clone();
        }
        if let Some(t) = &self.bidding_b {
            spec.bidding = t.clone();
        }
        match template {
            Some(t) if t.kind() == TemplateKind::Acceptance => spec.acceptance = t,
            Some(t) => spec.bidding = t,
            None => {}
        }
        if self.share_profiles {
            spec.opponent_utility = Some(self.utility_a.clone());
        }
        spec
    }
}
