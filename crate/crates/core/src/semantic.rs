//! Semantic roles for template nodes.
//!
//! Roles are assigned from node kind and position alone; the AST is
//! unambiguous so no text heuristics are involved.

use crate::template::{
    AcceptanceTactic, BiddingTactic, LinearOwner, LinearTerm, NodeId, NodeRef, Phase,
    StrategyTemplate, TemplateKind, ThresholdExpr,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RoleKind {
    TimePhase,
    OfferUtility,
    OwnPlannedBidUtility,
    ConcessionQuantile,
    DynamicThreshold,
    FixedThreshold,
    ThresholdCombinator,
    LinearTimeTerm,
    AcceptPredicate,
    BidDirective,
}

impl RoleKind {
    pub const ALL: [RoleKind; 10] = [
        RoleKind::TimePhase,
        RoleKind::OfferUtility,
        RoleKind::OwnPlannedBidUtility,
        RoleKind::ConcessionQuantile,
        RoleKind::DynamicThreshold,
        RoleKind::FixedThreshold,
        RoleKind::ThresholdCombinator,
        RoleKind::LinearTimeTerm,
        RoleKind::AcceptPredicate,
        RoleKind::BidDirective,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RoleKind::TimePhase => "TimePhase",
            RoleKind::OfferUtility => "OfferUtility",
            RoleKind::OwnPlannedBidUtility => "OwnPlannedBidUtility",
            RoleKind::ConcessionQuantile => "ConcessionQuantile",
            RoleKind::DynamicThreshold => "DynamicThreshold",
            RoleKind::FixedThreshold => "FixedThreshold",
            RoleKind::ThresholdCombinator => "ThresholdCombinator",
            RoleKind::LinearTimeTerm => "LinearTimeTerm",
            RoleKind::AcceptPredicate => "AcceptPredicate",
            RoleKind::BidDirective => "BidDirective",
        }
    }
}

impl fmt::Display for RoleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RoleKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        RoleKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown role kind `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum AttrValue {
    /// A template constant; rendered raw or rounded depending on audience.
    Number(f64),
    /// A percentage already rounded to two decimals.
    Percent(f64),
    Text(String),
    Flag(bool),
}

impl AttrValue {
    /// Truthiness used by rule predicates: flags by value, everything else
    /// by presence.
    pub fn is_truthy(&self) -> bool {
        !matches!(self, AttrValue::Flag(false))
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            AttrValue::Text(s) => Some(s),
            _ => None,
        }
    }
}

pub type Attributes = BTreeMap<String, AttrValue>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticRole {
    pub kind: RoleKind,
    pub attributes: Attributes,
}

impl SemanticRole {
    pub fn attr(&self, key: &str) -> Option<&AttrValue> {
        self.attributes.get(key)
    }
}

/// Total map from template node to role.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SemanticRep {
    roles: BTreeMap<NodeId, SemanticRole>,
}

impl SemanticRep {
    pub fn get(&self, node: &NodeId) -> Option<&SemanticRole> {
        self.roles.get(node)
    }

    pub fn len(&self) -> usize {
        self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NodeId, &SemanticRole)> {
        self.roles.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnnotateError {
    #[error("no role rule for node {0}")]
    UnknownConstruct(NodeId),
}

const FLAT_SLOPE: f64 = 1e-9;

pub fn annotate(template: &StrategyTemplate) -> Result<SemanticRep, AnnotateError> {
    let mut roles = BTreeMap::new();
    for (id, node) in template.nodes() {
        let mut role = role_for(template, node);
        if role.kind == RoleKind::ThresholdCombinator {
            let nested = !id.as_str().ends_with(".threshold");
            role.attributes.insert("nested".into(), AttrValue::Flag(nested));
        }
        if roles.insert(id.clone(), role).is_some() {
            return Err(AnnotateError::UnknownConstruct(id));
        }
    }
    Ok(SemanticRep { roles })
}

/// Rendering attributes of a phase interval.
pub fn interval_phrase(phase: &Phase) -> Attributes {
    let mut a = Attributes::new();
    a.insert("start".into(), AttrValue::Number(phase.start));
    a.insert("end".into(), AttrValue::Number(phase.end));
    a.insert("percentStart".into(), AttrValue::Percent(percent(phase.start)));
    a.insert("percentEnd".into(), AttrValue::Percent(percent(phase.end)));
    a.insert("isInitial".into(), AttrValue::Flag(phase.is_initial()));
    a.insert("isFinal".into(), AttrValue::Flag(phase.is_final()));
    a.insert(
        "close".into(),
        AttrValue::Text(if phase.is_final() { "]" } else { ")" }.into()),
    );
    a
}

/// `100·x` rounded half-up to two decimals.
pub fn percent(fraction: f64) -> f64 {
    let scaled = fraction * 100.0;
    // Trim representation noise before rounding so 0.0361 gives 3.61.
    let cleaned = (scaled * 1e9).round() / 1e9;
    let hundredths = (cleaned * 100.0 * 1e6).round() / 1e6;
    (hundredths + 0.5).floor() / 100.0
}

fn slope_direction(slope: f64) -> &'static str {
    if slope.abs() < FLAT_SLOPE {
        "flat"
    } else if slope > 0.0 {
        "rising"
    } else {
        "falling"
    }
}

fn direction_attrs(a: &mut Attributes, slope: f64) {
    let dir = slope_direction(slope);
    a.insert("slopeDirection".into(), AttrValue::Text(dir.into()));
    for d in ["rising", "falling", "flat"] {
        a.insert(d.into(), AttrValue::Flag(d == dir));
    }
}

fn text(s: impl Into<String>) -> AttrValue {
    AttrValue::Text(s.into())
}

fn role_for(template: &StrategyTemplate, node: NodeRef<'_>) -> SemanticRole {
    let mut a = Attributes::new();
    let kind = match node {
        NodeRef::Interval { phase } => {
            a = interval_phrase(&template.phases()[phase]);
            let acceptance = template.kind() == TemplateKind::Acceptance;
            a.insert("acceptance".into(), AttrValue::Flag(acceptance));
            a.insert("bidding".into(), AttrValue::Flag(!acceptance));
            RoleKind::TimePhase
        }
        NodeRef::Predicate { phase, threshold } => {
            a.insert(
                "combined".into(),
                AttrValue::Flag(matches!(threshold, ThresholdExpr::Max { .. })),
            );
            let condition = template.phases()[phase]
                .condition()
                .map(|c| c.to_string())
                .unwrap_or_default();
            a.insert("formula".into(), text(condition));
            RoleKind::AcceptPredicate
        }
        NodeRef::OfferUtility { .. } => {
            a.insert("symbol".into(), text("U_u(ω_t^o)"));
            RoleKind::OfferUtility
        }
        NodeRef::Combinator { .. } => {
            a.insert("symbol".into(), text("max"));
            RoleKind::ThresholdCombinator
        }
        NodeRef::Acceptance(tactic) => match tactic {
            AcceptanceTactic::OwnNextBidUtility => {
                a.insert("symbol".into(), text("U_u(ω_t)"));
                RoleKind::OwnPlannedBidUtility
            }
            AcceptanceTactic::QuantileConcession { p } => {
                a.insert("symbol".into(), text("Q_{U(Ω^o_t)}"));
                a.insert("slope".into(), AttrValue::Number(p.slope()));
                a.insert("intercept".into(), AttrValue::Number(p.intercept()));
                direction_attrs(&mut a, p.slope());
                RoleKind::ConcessionQuantile
            }
            AcceptanceTactic::DynamicThreshold => {
                a.insert("symbol".into(), text("ū_t"));
                RoleKind::DynamicThreshold
            }
            AcceptanceTactic::FixedThreshold { value } => {
                a.insert("symbol".into(), text("u"));
                match value {
                    Some(v) => {
                        a.insert("value".into(), AttrValue::Number(*v));
                        a.insert("literal".into(), AttrValue::Flag(true));
                    }
                    None => {
                        a.insert("configured".into(), AttrValue::Flag(true));
                    }
                }
                RoleKind::FixedThreshold
            }
        },
        NodeRef::Linear { term, owner } => {
            linear_attrs(&mut a, term);
            let (owner_name, q) = match owner {
                LinearOwner::QuantileLevel => ("quantile", true),
                LinearOwner::ParetoWeight => ("pareto", false),
            };
            a.insert("owner".into(), text(owner_name));
            a.insert("quantile".into(), AttrValue::Flag(q));
            a.insert("pareto".into(), AttrValue::Flag(!q));
            RoleKind::LinearTimeTerm
        }
        NodeRef::BidChoice {
            choice, primary, ..
        } => {
            let tactic = choice.tactic.keyword();
            a.insert("tactic".into(), text(tactic));
            for name in ["boulware", "pareto", "opponent_greedy", "random_above_threshold"] {
                a.insert(name.into(), AttrValue::Flag(name == tactic));
            }
            let status = if primary {
                "primary"
            } else if choice.selected {
                "backup"
            } else {
                "off"
            };
            a.insert("status".into(), text(status));
            for s in ["primary", "backup", "off"] {
                a.insert(s.into(), AttrValue::Flag(s == status));
            }
            match choice.tactic {
                BiddingTactic::Boulware { params: Some(p) } => {
                    a.insert("params".into(), AttrValue::Flag(true));
                    a.insert("e".into(), AttrValue::Number(p.e));
                    a.insert("uMin".into(), AttrValue::Number(p.u_min));
                    a.insert("uMax".into(), AttrValue::Number(p.u_max));
                }
                BiddingTactic::ParetoWeighted { weight } => {
                    direction_attrs(&mut a, weight.slope());
                }
                _ => {}
            }
            RoleKind::BidDirective
        }
    };
    SemanticRole {
        kind,
        attributes: a,
    }
}

fn linear_attrs(a: &mut Attributes, term: &LinearTerm) {
    match *term {
        LinearTerm::Constant { value } => {
            a.insert("intercept".into(), AttrValue::Number(value));
        }
        LinearTerm::Affine { slope, intercept } => {
            a.insert("slope".into(), AttrValue::Number(slope));
            if let Some(b) = intercept {
                a.insert("intercept".into(), AttrValue::Number(b));
            }
        }
    }
    a.insert("expr".into(), text(term.to_expr().to_string()));
    direction_attrs(a, term.slope());
}
