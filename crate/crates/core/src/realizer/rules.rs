//! Rule files.
//!
//! One rule per line: `pattern | expert template | layperson template`.
//! A pattern is a role kind (or `Header`) with optional predicates in
//! brackets, e.g. `TimePhase[acceptance,isInitial]` or
//! `BidDirective[tactic=pareto]`. A leading `~` marks an interpretive rule.
//! Templates use `{slot}`, `{^slot}` (capitalized) and `[[ ... ]]` for
//! sections that are dropped when a slot inside them cannot be filled.

use crate::semantic::{AttrValue, Attributes, RoleKind};
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuleError {
    #[error("rule file line {line}: {reason}")]
    RuleFile { line: usize, reason: String },
    #[error("no rule for role `{0}`")]
    MissingRole(String),
}

/// What a rule applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleTarget {
    Role(RoleKind),
    /// The explanation's opening segment.
    Header,
}

impl fmt::Display for RuleTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleTarget::Role(k) => f.write_str(k.name()),
            RuleTarget::Header => f.write_str("Header"),
        }
    }
}

impl FromStr for RuleTarget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "Header" {
            Ok(RuleTarget::Header)
        } else {
            s.parse().map(RuleTarget::Role)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Predicate {
    Truthy(String),
    Equals(String, String),
}

impl Predicate {
    pub fn holds(&self, attrs: &Attributes) -> bool {
        match self {
            Predicate::Truthy(key) => attrs.get(key).is_some_and(AttrValue::is_truthy),
            Predicate::Equals(key, want) => match attrs.get(key) {
                Some(AttrValue::Text(s)) => s == want,
                Some(AttrValue::Flag(b)) => b.to_string() == *want,
                Some(AttrValue::Number(n)) | Some(AttrValue::Percent(n)) => n.to_string() == *want,
                None => false,
            },
        }
    }

    fn key(&self) -> &str {
        match self {
            Predicate::Truthy(k) | Predicate::Equals(k, _) => k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RolePattern {
    pub target: RuleTarget,
    pub predicates: BTreeSet<Predicate>,
    pub interpretive: bool,
}

impl RolePattern {
    pub fn matches(&self, target: RuleTarget, attrs: &Attributes) -> bool {
        self.target == target && self.predicates.iter().all(|p| p.holds(attrs))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Piece {
    Text(String),
    Slot { name: String, capitalize: bool },
    Optional(Vec<Piece>),
}

/// A parsed sentence template.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceTemplate {
    pieces: Vec<Piece>,
}

impl SentenceTemplate {
    pub fn parse(src: &str) -> Result<Self, String> {
        let mut chars = src.chars().peekable();
        let mut stack: Vec<Vec<Piece>> = vec![Vec::new()];
        let mut text = String::new();
        while let Some(c) = chars.next() {
            match c {
                '{' => {
                    let mut name = String::new();
                    loop {
                        match chars.next() {
                            Some('}') => break,
                            Some(c) => name.push(c),
                            None => return Err(format!("unclosed slot `{{{name}`")),
                        }
                    }
                    let (capitalize, name) = match name.strip_prefix('^') {
                        Some(rest) => (true, rest.to_string()),
                        None => (false, name),
                    };
                    if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
                        return Err(format!("bad slot name `{name}`"));
                    }
                    flush(&mut text, stack.last_mut().expect("stack"));
                    stack
                        .last_mut()
                        .expect("stack")
                        .push(Piece::Slot { name, capitalize });
                }
                '[' if chars.peek() == Some(&'[') => {
                    chars.next();
                    flush(&mut text, stack.last_mut().expect("stack"));
                    stack.push(Vec::new());
                }
                ']' if chars.peek() == Some(&']') && stack.len() > 1 => {
                    chars.next();
                    flush(&mut text, stack.last_mut().expect("stack"));
                    let inner = stack.pop().expect("stack");
                    stack.last_mut().expect("stack").push(Piece::Optional(inner));
                }
                c => text.push(c),
            }
        }
        if stack.len() != 1 {
            return Err("unclosed `[[` section".into());
        }
        let mut pieces = stack.pop().expect("stack");
        flush(&mut text, &mut pieces);
        Ok(SentenceTemplate { pieces })
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn slot_names(&self) -> Vec<&str> {
        fn collect<'a>(pieces: &'a [Piece], out: &mut Vec<&'a str>) {
            for p in pieces {
                match p {
                    Piece::Slot { name, .. } => out.push(name),
                    Piece::Optional(inner) => collect(inner, out),
                    Piece::Text(_) => {}
                }
            }
        }
        let mut out = Vec::new();
        collect(&self.pieces, &mut out);
        out
    }

    /// Fill the template. `resolve` returns `None` for unfillable slots;
    /// outside an optional section that is an error naming the slot.
    pub fn render(&self, resolve: &mut dyn FnMut(&str) -> Option<String>) -> Result<String, String> {
        let mut out = String::new();
        render_pieces(&self.pieces, resolve, &mut out)?;
        Ok(out)
    }
}

fn flush(text: &mut String, pieces: &mut Vec<Piece>) {
    if !text.is_empty() {
        pieces.push(Piece::Text(std::mem::take(text)));
    }
}

fn render_pieces(
    pieces: &[Piece],
    resolve: &mut dyn FnMut(&str) -> Option<String>,
    out: &mut String,
) -> Result<(), String> {
    for p in pieces {
        match p {
            Piece::Text(t) => out.push_str(t),
            Piece::Slot { name, capitalize } => {
                let value = resolve(name).ok_or_else(|| name.clone())?;
                if *capitalize {
                    out.push_str(&capitalize_first(&value));
                } else {
                    out.push_str(&value);
                }
            }
            Piece::Optional(inner) => {
                let mut buf = String::new();
                if render_pieces(inner, resolve, &mut buf).is_ok() {
                    out.push_str(&buf);
                }
            }
        }
    }
    Ok(())
}

pub(crate) fn capitalize_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub pattern: RolePattern,
    pub expert: SentenceTemplate,
    pub layperson: SentenceTemplate,
    pub line: usize,
}

impl Rule {
    pub fn template(&self, audience: super::Audience) -> &SentenceTemplate {
        match audience {
            super::Audience::Expert => &self.expert,
            super::Audience::Layperson => &self.layperson,
        }
    }
}

/// Attribute and child slots each target may use.
pub fn slot_schema(target: RuleTarget) -> &'static [&'static str] {
    match target {
        RuleTarget::Header => &["name"],
        RuleTarget::Role(kind) => match kind {
            RoleKind::TimePhase => &["start", "end", "percentStart", "percentEnd", "close"],
            RoleKind::OfferUtility | RoleKind::OwnPlannedBidUtility | RoleKind::DynamicThreshold => {
                &["symbol"]
            }
            RoleKind::ConcessionQuantile => {
                &["symbol", "slope", "intercept", "slopeDirection", "linear"]
            }
            RoleKind::FixedThreshold => &["symbol", "value"],
            RoleKind::ThresholdCombinator => &["symbol", "args"],
            RoleKind::LinearTimeTerm => &["slope", "intercept", "expr", "slopeDirection", "owner"],
            RoleKind::AcceptPredicate => &["formula", "lhs", "rhs"],
            RoleKind::BidDirective => &[
                "tactic",
                "status",
                "e",
                "uMin",
                "uMax",
                "slopeDirection",
                "linear",
            ],
        },
    }
}

/// Rules with a lookup by role.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet {
    rules: Vec<Rule>,
}

const DEFAULT_RULES: &str = include_str!("../../assets/default.rules");

impl RuleSet {
    pub fn parse(source: &str) -> Result<Self, RuleError> {
        let mut rules: Vec<Rule> = Vec::new();
        for (i, raw) in source.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let err = |reason: String| RuleError::RuleFile { line, reason };
            let parts: Vec<&str> = trimmed.split('|').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(err(format!(
                    "expected `pattern | expert | layperson`, found {} field(s)",
                    parts.len()
                )));
            }
            let pattern = parse_pattern(parts[0]).map_err(&err)?;
            let expert = SentenceTemplate::parse(parts[1]).map_err(&err)?;
            let layperson = SentenceTemplate::parse(parts[2]).map_err(&err)?;
            let schema = slot_schema(pattern.target);
            for slot in expert.slot_names().into_iter().chain(layperson.slot_names()) {
                if !schema.contains(&slot) {
                    return Err(err(format!(
                        "slot `{{{slot}}}` is not available for {}",
                        pattern.target
                    )));
                }
            }
            if rules.iter().any(|r| r.pattern == pattern) {
                return Err(err(format!("duplicate pattern `{}`", parts[0])));
            }
            rules.push(Rule {
                pattern,
                expert,
                layperson,
                line,
            });
        }
        let set = RuleSet { rules };
        for kind in RoleKind::ALL {
            if !set.has_base_rule(RuleTarget::Role(kind)) {
                return Err(RuleError::MissingRole(kind.name().to_string()));
            }
        }
        if !set.has_base_rule(RuleTarget::Header) {
            return Err(RuleError::MissingRole("Header".to_string()));
        }
        Ok(set)
    }

    /// The rule file shipped with the crate.
    pub fn default_rules() -> Self {
        RuleSet::parse(DEFAULT_RULES).expect("shipped rule file is valid")
    }

    pub fn default_source() -> &'static str {
        DEFAULT_RULES
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    fn has_base_rule(&self, target: RuleTarget) -> bool {
        self.rules
            .iter()
            .any(|r| r.pattern.target == target && !r.pattern.interpretive)
    }

    /// Most specific matching rule; ties go to the earlier line.
    pub fn lookup(&self, target: RuleTarget, attrs: &Attributes, interpretive: bool) -> Option<&Rule> {
        let mut best: Option<&Rule> = None;
        for rule in &self.rules {
            if rule.pattern.interpretive != interpretive || !rule.pattern.matches(target, attrs) {
                continue;
            }
            if best.is_none_or(|b| rule.pattern.predicates.len() > b.pattern.predicates.len()) {
                best = Some(rule);
            }
        }
        best
    }
}

pub(crate) fn parse_pattern(src: &str) -> Result<RolePattern, String> {
    let (interpretive, src) = match src.strip_prefix('~') {
        Some(rest) => (true, rest.trim()),
        None => (false, src),
    };
    let (name, preds) = match src.find('[') {
        Some(open) => {
            let inner = src[open + 1..]
                .strip_suffix(']')
                .ok_or_else(|| format!("unclosed predicate list in `{src}`"))?;
            (&src[..open], Some(inner))
        }
        None => (src, None),
    };
    let target: RuleTarget = name.trim().parse()?;
    let mut predicates = BTreeSet::new();
    for p in preds.into_iter().flat_map(|s| s.split(',')) {
        let p = p.trim();
        if p.is_empty() {
            return Err("empty predicate".into());
        }
        let pred = match p.split_once('=') {
            Some((k, v)) => Predicate::Equals(k.trim().to_string(), v.trim().to_string()),
            None => Predicate::Truthy(p.to_string()),
        };
        if pred.key().is_empty() {
            return Err(format!("bad predicate `{p}`"));
        }
        predicates.insert(pred);
    }
    Ok(RolePattern {
        target,
        predicates,
        interpretive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(skip: Option<RoleKind>) -> String {
        let mut s = String::from("Header | {name} | {name}\n");
        for k in RoleKind::ALL {
            if Some(k) != skip {
                s.push_str(&format!("{} | x | y\n", k.name()));
            }
        }
        s
    }

    #[test]
    fn default_rules_cover_every_role() {
        let set = RuleSet::default_rules();
        for kind in RoleKind::ALL {
            assert!(set.has_base_rule(RuleTarget::Role(kind)), "{kind}");
        }
    }

    #[test]
    fn missing_combinator_rule() {
        let err = RuleSet::parse(&minimal(Some(RoleKind::ThresholdCombinator))).unwrap_err();
        assert_eq!(err, RuleError::MissingRole("ThresholdCombinator".into()));
    }

    #[test]
    fn slot_resolution_against_schema() {
        let src = minimal(None) + "TimePhase[isInitial] | up to {percentEnd}% | first {percentEnd}%\n";
        assert!(RuleSet::parse(&src).is_ok());
        let src = minimal(None) + "TimePhase[isInitial] | up to {slope} | x\n";
        match RuleSet::parse(&src) {
            Err(RuleError::RuleFile { line, reason }) => {
                assert_eq!(line, 12);
                assert!(reason.contains("{slope}"), "{reason}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_patterns_rejected() {
        let src = minimal(None) + "TimePhase[a, b] | x | y\nTimePhase[b,a] | x | y\n";
        assert!(matches!(RuleSet::parse(&src), Err(RuleError::RuleFile { line: 13, .. })));
    }

    #[test]
    fn most_specific_rule_wins() {
        let src = minimal(None) + "TimePhase[isInitial] | first | first\n";
        let set = RuleSet::parse(&src).unwrap();
        let mut attrs = Attributes::new();
        attrs.insert("isInitial".into(), AttrValue::Flag(true));
        let rule = set.lookup(RuleTarget::Role(RoleKind::TimePhase), &attrs, false).unwrap();
        assert_eq!(rule.line, 12);
        attrs.insert("isInitial".into(), AttrValue::Flag(false));
        let rule = set.lookup(RuleTarget::Role(RoleKind::TimePhase), &attrs, false).unwrap();
        assert_eq!(rule.line, 2);
    }

    #[test]
    fn optional_sections_and_capitalization() {
        let t = SentenceTemplate::parse("{^a} tactic[[ with e = {e}]].").unwrap();
        let with = t
            .render(&mut |s| match s {
                "a" => Some("boulware".into()),
                "e" => Some("0.2".into()),
                _ => None,
            })
            .unwrap();
        assert_eq!(with, "Boulware tactic with e = 0.2.");
        let without = t.render(&mut |s| (s == "a").then(|| "boulware".into())).unwrap();
        assert_eq!(without, "Boulware tactic.");
        assert_eq!(t.render(&mut |_| None), Err("a".to_string()));
    }

    #[test]
    fn malformed_lines() {
        assert!(matches!(
            RuleSet::parse("TimePhase | only two"),
            Err(RuleError::RuleFile { line: 1, .. })
        ));
        assert!(matches!(
            RuleSet::parse("Nonsense | a | b"),
            Err(RuleError::RuleFile { line: 1, .. })
        ));
        assert!(matches!(
            RuleSet::parse("TimePhase | {unclosed | b"),
            Err(RuleError::RuleFile { line: 1, .. })
        ));
    }
}
