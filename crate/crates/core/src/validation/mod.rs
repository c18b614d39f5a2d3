//! Deterministic checks of explanation text against its template.
//!
//! The checks read the template directly and scan the text with their own
//! numeral scanner, so they share no logic with the realizer they audit.

mod numerals;

pub use numerals::{scan_numerals, Numeral};

use crate::realizer::{Explanation, RuleSet};
use crate::semantic::{annotate, percent, AttrValue, RoleKind, SemanticRep};
use crate::template::{NodeId, StrategyTemplate};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Numeric agreement tolerance, in the units the number is written in.
pub const NUMERIC_TOLERANCE: f64 = 0.005;
const SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityCoverage {
    pub passed: bool,
    /// Traced nodes whose role is not mentioned.
    pub missing: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericRoundTrip {
    pub passed: bool,
    /// Required constants not found in the text.
    pub missing: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoForeignNumbers {
    pub passed: bool,
    /// Numerals that match no template constant.
    pub foreign: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub index: usize,
    pub phase: Option<usize>,
    pub entity_coverage: EntityCoverage,
    pub numeric_round_trip: NumericRoundTrip,
    pub no_foreign_numbers: NoForeignNumbers,
}

impl SegmentReport {
    pub fn passed(&self) -> bool {
        self.entity_coverage.passed
            && self.numeric_round_trip.passed
            && self.no_foreign_numbers.passed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub segments: Vec<SegmentReport>,
}

impl ValidationReport {
    pub fn failing(&self) -> impl Iterator<Item = &SegmentReport> {
        self.segments.iter().filter(|s| !s.passed())
    }
}

/// Words that show a role is being talked about. Short markers must stand
/// alone as words.
fn markers(kind: RoleKind, attrs: &crate::semantic::Attributes) -> &'static [&'static str] {
    match kind {
        RoleKind::TimePhase => &["time", "phase", "interval", "session", "negotiation"],
        RoleKind::OfferUtility => &["offer", "ω_t^o"],
        RoleKind::OwnPlannedBidUtility => &["ω_t", "next", "propose"],
        RoleKind::ConcessionQuantile => &["quantile", "q_{", "special formula", "best"],
        RoleKind::DynamicThreshold => &["ū_t", "dynamic", "changing target"],
        RoleKind::FixedThreshold => &["u", "fixed"],
        RoleKind::ThresholdCombinator => &["max", "greater", "larger", "maximum", "highest"],
        RoleKind::LinearTimeTerm => &["t", "time"],
        RoleKind::AcceptPredicate => &["accept", "exceed", "at least", "≥", ">="],
        RoleKind::BidDirective => match attrs.get("tactic").and_then(AttrValue::as_text) {
            Some("boulware") => &["boulware", "stubborn", "concession"],
            Some("pareto") => &["pareto", "topsis", "fair", "balanc"],
            Some("opponent_greedy") => &["opponent", "other side"],
            Some("random_above_threshold") => &["random"],
            _ => &["bid", "offer"],
        },
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '^' | '{' | '}')
}

fn mentions(text: &str, marker: &str) -> bool {
    if marker.chars().count() > 2 {
        return text.contains(marker);
    }
    text.match_indices(marker).any(|(at, m)| {
        let before = text[..at].chars().next_back();
        let after = text[at + m.len()..].chars().next();
        !before.is_some_and(is_word_char) && !after.is_some_and(is_word_char)
    })
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= NUMERIC_TOLERANCE + SLACK
}

fn numeral_matches(n: &Numeral, value: f64) -> bool {
    if n.percent {
        close(n.value, percent(value)) || close(n.value, value * 100.0)
    } else {
        close(n.value, value)
    }
}

/// Validate every segment of `explanation` against `template`.
pub fn validate(explanation: &Explanation, template: &StrategyTemplate) -> ValidationReport {
    let semrep = annotate(template).unwrap_or_default();
    let constants = template.constants();
    let mut allowed: Vec<f64> = constants.iter().map(|c| c.value).collect();
    allowed.extend([0.0, 1.0]);

    let segments: Vec<SegmentReport> = explanation
        .segments
        .iter()
        .enumerate()
        .map(|(index, seg)| {
            let lower = seg.text.to_lowercase();
            // The template name is a label; digits inside it are not quantities.
            let numerals = if template.name().is_empty() {
                scan_numerals(&seg.text)
            } else {
                scan_numerals(&seg.text.replace(template.name(), " "))
            };

            let missing_roles: Vec<NodeId> = seg
                .trace
                .iter()
                .filter(|id| !covered(&semrep, id, &lower))
                .cloned()
                .collect();

            let mut missing = Vec::new();
            for c in constants.iter().filter(|c| seg.trace.contains(&c.node)) {
                if !numerals.iter().any(|n| numeral_matches(n, c.value)) && !missing.contains(&c.value)
                {
                    missing.push(c.value);
                }
            }

            let mut foreign: Vec<String> = Vec::new();
            for n in numerals.iter().filter(|n| !allowed.iter().any(|&v| numeral_matches(n, v))) {
                if !foreign.contains(&n.text) {
                    foreign.push(n.text.clone());
                }
            }

            SegmentReport {
                index,
                phase: seg.phase,
                entity_coverage: EntityCoverage {
                    passed: missing_roles.is_empty(),
                    missing: missing_roles,
                },
                numeric_round_trip: NumericRoundTrip {
                    passed: missing.is_empty(),
                    missing,
                },
                no_foreign_numbers: NoForeignNumbers {
                    passed: foreign.is_empty(),
                    foreign,
                },
            }
        })
        .collect();
    ValidationReport {
        passed: segments.iter().all(SegmentReport::passed),
        segments,
    }
}

fn covered(semrep: &SemanticRep, id: &NodeId, lower_text: &str) -> bool {
    match semrep.get(id) {
        Some(role) => markers(role.kind, &role.attributes)
            .iter()
            .any(|m| mentions(lower_text, m)),
        // A trace entry the template does not have cannot be covered.
        None => false,
    }
}

/// Replace the text of every failing segment with its rule-based
/// realization for the explanation's audience.
pub fn refine(
    explanation: &Explanation,
    report: &ValidationReport,
    template: &StrategyTemplate,
    rules: &RuleSet,
) -> Result<Explanation, crate::realizer::RealizeError> {
    let failing: BTreeSet<usize> = report.failing().map(|s| s.index).collect();
    if failing.is_empty() {
        return Ok(explanation.clone());
    }
    let semrep = annotate(template).unwrap_or_default();
    let base = crate::realizer::realize(template, &semrep, rules)?;
    let mut out = explanation.clone();
    for index in failing {
        let Some(seg) = out.segments.get_mut(index) else {
            continue;
        };
        let Some(fresh) = base.segments.iter().find(|s| s.phase == seg.phase) else {
            continue;
        };
        seg.text = fresh.variants.get(explanation.audience).to_string();
        seg.variants = fresh.variants.clone();
        seg.trace = fresh.trace.clone();
        seg.interpretive = fresh.interpretive.clone();
        seg.provenance = crate::realizer::Provenance::RuleBased;
    }
    Ok(out)
}
