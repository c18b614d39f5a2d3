use super::{BackendError, Directive, RefineContext, RefinementBackend};
use crate::realizer::{format_attr, parse_pattern, Audience, RolePattern, RuleTarget, SentenceTemplate};
use thiserror::Error;

const DEFAULT_TABLE: &str = include_str!("../../assets/offline.table");

#[derive(Debug, Clone, PartialEq, Error)]
#[error("substitution table line {line}: {reason}")]
pub struct TableError {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
struct Entry {
    directive: Directive,
    pattern: RolePattern,
    find: String,
    replace: SentenceTemplate,
}

/// Phrase substitutions keyed by role, in the rule-file line format.
/// `@elaborate` and `@simplify` open the section for each directive.
#[derive(Debug, Clone)]
pub struct SubstitutionTable {
    entries: Vec<Entry>,
}

impl SubstitutionTable {
    pub fn parse(source: &str) -> Result<Self, TableError> {
        let mut entries = Vec::new();
        let mut directive = None;
        for (i, raw) in source.lines().enumerate() {
            let line = i + 1;
            let err = |reason: String| TableError { line, reason };
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            match trimmed {
                "@elaborate" => {
                    directive = Some(Directive::Elaborate);
                    continue;
                }
                "@simplify" => {
                    directive = Some(Directive::Simplify);
                    continue;
                }
                _ => {}
            }
            let directive = directive.ok_or_else(|| err("entry before any @section".into()))?;
            let parts: Vec<&str> = trimmed.split('|').map(str::trim).collect();
            let [pattern, find, replace] = parts.as_slice() else {
                return Err(err("expected `pattern | find | replace`".into()));
            };
            if find.is_empty() {
                return Err(err("empty search phrase".into()));
            }
            let pattern = parse_pattern(pattern).map_err(&err)?;
            if !matches!(pattern.target, RuleTarget::Role(_)) {
                return Err(err("substitutions are keyed by role kind".into()));
            }
            entries.push(Entry {
                directive,
                pattern,
                find: find.to_string(),
                replace: SentenceTemplate::parse(replace).map_err(&err)?,
            });
        }
        Ok(SubstitutionTable { entries })
    }

    pub fn default_table() -> Self {
        SubstitutionTable::parse(DEFAULT_TABLE).expect("shipped substitution table is valid")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Apply each entry of the directive's section at most once.
    pub fn apply(&self, text: &str, directive: Directive, context: &RefineContext<'_>) -> String {
        let audience = match directive {
            Directive::Elaborate => Audience::Expert,
            Directive::Simplify => Audience::Layperson,
        };
        let mut out = text.to_string();
        for entry in self.entries.iter().filter(|e| e.directive == directive) {
            let Some(at) = out.find(&entry.find) else {
                continue;
            };
            let Some(role) = context
                .roles
                .iter()
                .find(|r| entry.pattern.matches(RuleTarget::Role(r.kind), &r.attributes))
            else {
                continue;
            };
            let Ok(replacement) = entry
                .replace
                .render(&mut |slot| role.attr(slot).map(|v| format_attr(v, audience)))
            else {
                continue;
            };
            out.replace_range(at..at + entry.find.len(), &replacement);
        }
        out
    }
}

/// Deterministic backend driven by a [`SubstitutionTable`].
#[derive(Debug, Clone)]
pub struct OfflineBackend {
    table: SubstitutionTable,
}

impl OfflineBackend {
    pub fn new(table: SubstitutionTable) -> Self {
        OfflineBackend { table }
    }
}

impl Default for OfflineBackend {
    fn default() -> Self {
        OfflineBackend::new(SubstitutionTable::default_table())
    }
}

impl RefinementBackend for OfflineBackend {
    fn label(&self) -> &str {
        "offline"
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn refine(
        &self,
        text: &str,
        directive: Directive,
        context: &RefineContext<'_>,
    ) -> Result<String, BackendError> {
        Ok(self.table.apply(text, directive, context))
    }
}
