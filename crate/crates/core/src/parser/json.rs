use crate::expr::MathExpr;
use crate::template::{PhaseRule, StrategyTemplate, TemplateKind};
use serde::Serialize;

/// JSON shape of a parsed template. Field order is fixed by declaration
/// order, so serialized output is stable.
#[derive(Debug, Clone, Serialize)]
pub struct TemplateDocument<'a> {
    pub kind: TemplateKind,
    pub name: &'a str,
    pub phases: Vec<PhaseDocument<'a>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseDocument<'a> {
    pub start: f64,
    pub end: f64,
    pub closed: bool,
    pub rule: &'a PhaseRule,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub condition: Option<MathExpr>,
}

pub fn template_json(template: &StrategyTemplate) -> TemplateDocument<'_> {
    let last = template.phases().len() - 1;
    TemplateDocument {
        kind: template.kind(),
        name: template.name(),
        phases: template
            .phases()
            .iter()
            .enumerate()
            .map(|(i, p)| PhaseDocument {
                start: p.start,
                end: p.end,
                closed: i == last,
                rule: &p.rule,
                condition: p.condition(),
            })
            .collect(),
    }
}
