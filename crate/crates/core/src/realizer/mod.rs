//! Rule-based realization of semantic roles as text.

mod rules;

pub(crate) use rules::parse_pattern;
pub use rules::{
    slot_schema, Piece, Predicate, RolePattern, Rule, RuleError, RuleSet, RuleTarget,
    SentenceTemplate,
};

use crate::semantic::{AttrValue, RoleKind, SemanticRep};
use crate::template::{NodeId, StrategyTemplate, TemplateKind};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Audience {
    Expert,
    Layperson,
}

impl Audience {
    pub fn name(self) -> &'static str {
        match self {
            Audience::Expert => "expert",
            Audience::Layperson => "layperson",
        }
    }
}

impl fmt::Display for Audience {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Audience {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "expert" => Ok(Audience::Expert),
            "layperson" => Ok(Audience::Layperson),
            other => Err(format!("unknown audience `{other}` (expected expert or layperson)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    RuleBased,
    Enriched,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variants {
    pub expert: String,
    pub layperson: String,
}

impl Variants {
    pub fn get(&self, audience: Audience) -> &str {
        match audience {
            Audience::Expert => &self.expert,
            Audience::Layperson => &self.layperson,
        }
    }

    pub fn get_mut(&mut self, audience: Audience) -> &mut String {
        match audience {
            Audience::Expert => &mut self.expert,
            Audience::Layperson => &mut self.layperson,
        }
    }
}

/// One unit of an explanation: the header, or the description of a phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// `None` for the header.
    pub phase: Option<usize>,
    pub text: String,
    pub audience: Audience,
    pub provenance: Provenance,
    /// Template nodes this segment describes.
    pub trace: BTreeSet<NodeId>,
    /// Nodes that also received an interpretive remark.
    #[serde(default)]
    pub interpretive: BTreeSet<NodeId>,
    pub variants: Variants,
    #[serde(default)]
    pub fallback_used: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub template: String,
    pub kind: TemplateKind,
    pub audience: Audience,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<String>,
    pub segments: Vec<Segment>,
}

impl Explanation {
    /// Segment texts joined by blank lines.
    pub fn text(&self) -> String {
        self.segments
            .iter()
            .map(|s| s.text.as_str())
            .collect::<Vec<_>>()
            .join("\n\n")
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RealizeError {
    #[error("node {0} has no semantic role")]
    MissingRole(NodeId),
    #[error("no rule matches node {0}")]
    NoMatchingRule(String),
    #[error("rule on line {line} cannot fill slot `{{{slot}}}` for node {node}")]
    UnresolvedSlot {
        node: String,
        slot: String,
        line: usize,
    },
}

struct Realizer<'a> {
    template: &'a StrategyTemplate,
    semrep: &'a SemanticRep,
    rules: &'a RuleSet,
}

/// Realize every phase of `template` with `rules`. The returned explanation
/// carries both audience variants; its text is the expert one.
pub fn realize(
    template: &StrategyTemplate,
    semrep: &SemanticRep,
    rules: &RuleSet,
) -> Result<Explanation, RealizeError> {
    let r = Realizer {
        template,
        semrep,
        rules,
    };
    let mut segments = vec![r.header()?];
    for phase in 0..template.phases().len() {
        segments.push(r.phase_segment(phase)?);
    }
    Ok(Explanation {
        template: template.name().to_string(),
        kind: template.kind(),
        audience: Audience::Expert,
        backend: None,
        segments,
    })
}

/// Select the audience variant of every segment. Traces are untouched, and
/// applying the same audience twice changes nothing.
pub fn customize(explanation: &Explanation, audience: Audience) -> Explanation {
    let mut out = explanation.clone();
    out.audience = audience;
    for seg in &mut out.segments {
        seg.audience = audience;
        seg.text = seg.variants.get(audience).to_string();
    }
    out
}

impl Realizer<'_> {
    fn header(&self) -> Result<Segment, RealizeError> {
        let mut attrs = crate::semantic::Attributes::new();
        let acceptance = self.template.kind() == TemplateKind::Acceptance;
        attrs.insert("acceptance".into(), AttrValue::Flag(acceptance));
        attrs.insert("bidding".into(), AttrValue::Flag(!acceptance));
        let rule = self
            .rules
            .lookup(RuleTarget::Header, &attrs, false)
            .ok_or_else(|| RealizeError::NoMatchingRule("header".into()))?;
        let render = |audience| {
            rule.template(audience)
                .render(&mut |slot| (slot == "name").then(|| self.template.name().to_string()))
                .map_err(|slot| RealizeError::UnresolvedSlot {
                    node: "header".into(),
                    slot,
                    line: rule.line,
                })
        };
        let variants = Variants {
            expert: render(Audience::Expert)?,
            layperson: render(Audience::Layperson)?,
        };
        Ok(Segment {
            phase: None,
            text: variants.expert.clone(),
            audience: Audience::Expert,
            provenance: Provenance::RuleBased,
            trace: BTreeSet::new(),
            interpretive: BTreeSet::new(),
            variants,
            fallback_used: false,
        })
    }

    fn phase_segment(&self, phase: usize) -> Result<Segment, RealizeError> {
        let base = NodeId::phase(phase);
        let trace: Vec<NodeId> = self
            .template
            .nodes()
            .into_iter()
            .map(|(id, _)| id)
            .filter(|id| id.phase_index() == Some(phase))
            .collect();
        // Top-level clauses: the interval, then the rule's root nodes.
        let mut roots = vec![base.child("interval")];
        for id in &trace {
            let is_root = id.as_str() == base.child("accept").as_str()
                || (id.as_str().starts_with(base.child("bid").as_str())
                    && id.as_str().matches('.').count() == 2);
            if is_root {
                roots.push(id.clone());
            }
        }
        let mut interpretive = BTreeSet::new();
        let mut text = |audience: Audience| -> Result<String, RealizeError> {
            let mut parts = Vec::new();
            for root in &roots {
                parts.push(self.render_node(root, audience)?);
            }
            for id in &trace {
                let role = self.role(id)?;
                if let Some(rule) =
                    self.rules
                        .lookup(RuleTarget::Role(role.kind), &role.attributes, true)
                {
                    parts.push(self.render_with(rule, id, audience)?);
                    interpretive.insert(id.clone());
                }
            }
            Ok(parts.join(" "))
        };
        let variants = Variants {
            expert: text(Audience::Expert)?,
            layperson: text(Audience::Layperson)?,
        };
        Ok(Segment {
            phase: Some(phase),
            text: variants.expert.clone(),
            audience: Audience::Expert,
            provenance: Provenance::RuleBased,
            trace: trace.into_iter().collect(),
            interpretive,
            variants,
            fallback_used: false,
        })
    }

    fn role(&self, id: &NodeId) -> Result<&crate::semantic::SemanticRole, RealizeError> {
        self.semrep
            .get(id)
            .ok_or_else(|| RealizeError::MissingRole(id.clone()))
    }

    fn render_node(&self, id: &NodeId, audience: Audience) -> Result<String, RealizeError> {
        let role = self.role(id)?;
        let rule = self
            .rules
            .lookup(RuleTarget::Role(role.kind), &role.attributes, false)
            .ok_or_else(|| RealizeError::NoMatchingRule(id.to_string()))?;
        self.render_with(rule, id, audience)
    }

    fn render_with(&self, rule: &Rule, id: &NodeId, audience: Audience) -> Result<String, RealizeError> {
        let role = self.role(id)?;
        let mut failure: Option<RealizeError> = None;
        let rendered = rule.template(audience).render(&mut |slot| {
            match self.resolve(id, role.kind, slot, audience) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    None
                }
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        rendered.map_err(|slot| RealizeError::UnresolvedSlot {
            node: id.to_string(),
            slot,
            line: rule.line,
        })
    }

    /// Value of `slot` for node `id`: a realized child or a formatted
    /// attribute. `Ok(None)` means the slot has no value for this node.
    fn resolve(
        &self,
        id: &NodeId,
        kind: RoleKind,
        slot: &str,
        audience: Audience,
    ) -> Result<Option<String>, RealizeError> {
        let child = match (kind, slot) {
            (RoleKind::AcceptPredicate, "lhs") => Some(id.child("offer")),
            (RoleKind::AcceptPredicate, "rhs") => Some(id.child("threshold")),
            (RoleKind::ConcessionQuantile | RoleKind::BidDirective, "linear") => {
                Some(id.child("linear"))
            }
            (RoleKind::ThresholdCombinator, "args") => {
                let mut args = Vec::new();
                for k in 0.. {
                    let arg = id.child(&k.to_string());
                    if self.semrep.get(&arg).is_none() {
                        break;
                    }
                    args.push(self.render_node(&arg, audience)?);
                }
                return Ok((!args.is_empty()).then(|| join_list(&args)));
            }
            _ => None,
        };
        if let Some(child) = child {
            if self.semrep.get(&child).is_none() {
                return Ok(None);
            }
            return self.render_node(&child, audience).map(Some);
        }
        let role = self.role(id)?;
        Ok(role.attr(slot).map(|v| format_attr(v, audience)))
    }
}

pub(crate) fn format_attr(value: &AttrValue, audience: Audience) -> String {
    match value {
        AttrValue::Number(n) => match audience {
            Audience::Expert => format!("{n}"),
            Audience::Layperson => format!("{n:.2}"),
        },
        AttrValue::Percent(p) => format!("{p:.2}"),
        AttrValue::Text(s) => s.clone(),
        AttrValue::Flag(b) => if *b { "yes" } else { "no" }.to_string(),
    }
}

/// `a`, `a and b`, `a, b and c`.
fn join_list(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}
