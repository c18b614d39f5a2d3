//! Refinement of rule-based text through pluggable backends.

mod offline;
mod remote;

pub use offline::{OfflineBackend, SubstitutionTable, TableError};
pub use remote::{RemoteBackend, RemoteConfig};

use crate::realizer::{Audience, Explanation, Provenance};
use crate::semantic::{SemanticRep, SemanticRole};
use crate::validation::scan_numerals;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Directive {
    /// Richer wording, used on expert text.
    Elaborate,
    /// Plainer wording, used on layperson text.
    Simplify,
}

/// Roles of the segment being refined.
#[derive(Debug, Clone, Default)]
pub struct RefineContext<'a> {
    pub phase: Option<usize>,
    pub roles: Vec<&'a SemanticRole>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error("backend timed out")]
    Timeout,
    #[error("transport error: {0}")]
    Transport(String),
    #[error("unusable response: {0}")]
    BadResponse(String),
    #[error("backend not configured: {0}")]
    Config(String),
    #[error("output dropped numeral `{0}`")]
    DroppedNumeral(String),
    #[error("output is empty")]
    Empty,
}

/// A text refiner. Implementations must tolerate concurrent calls.
pub trait RefinementBackend: Send + Sync {
    fn label(&self) -> &str;
    fn is_deterministic(&self) -> bool;
    fn refine(
        &self,
        text: &str,
        directive: Directive,
        context: &RefineContext<'_>,
    ) -> Result<String, BackendError>;
}

/// Returns its input unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct PassthroughBackend;

impl RefinementBackend for PassthroughBackend {
    fn label(&self) -> &str {
        "passthrough"
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn refine(&self, text: &str, _: Directive, _: &RefineContext<'_>) -> Result<String, BackendError> {
        Ok(text.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnrichWarning {
    pub segment: usize,
    pub audience: Audience,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Enriched {
    pub explanation: Explanation,
    pub warnings: Vec<EnrichWarning>,
}

/// Run `backend` on every segment in order: expert variants are elaborated,
/// layperson variants simplified. A failing call, or output that loses a
/// numeral of its input, keeps the original text and sets `fallback_used`.
pub fn enrich(
    explanation: &Explanation,
    semrep: &SemanticRep,
    backend: &dyn RefinementBackend,
) -> Enriched {
    let mut out = explanation.clone();
    out.backend = Some(backend.label().to_string());
    let mut warnings = Vec::new();
    for (index, seg) in out.segments.iter_mut().enumerate() {
        let context = RefineContext {
            phase: seg.phase,
            roles: seg.trace.iter().filter_map(|id| semrep.get(id)).collect(),
        };
        for (audience, directive) in [
            (Audience::Expert, Directive::Elaborate),
            (Audience::Layperson, Directive::Simplify),
        ] {
            let input = seg.variants.get(audience).to_string();
            match backend
                .refine(&input, directive, &context)
                .and_then(|text| check_output(&input, text))
            {
                Ok(text) => *seg.variants.get_mut(audience) = text,
                Err(e) => {
                    seg.fallback_used = true;
                    warnings.push(EnrichWarning {
                        segment: index,
                        audience,
                        message: e.to_string(),
                    });
                }
            }
        }
        seg.text = seg.variants.get(seg.audience).to_string();
        seg.provenance = Provenance::Enriched;
    }
    Enriched {
        explanation: out,
        warnings,
    }
}

fn check_output(input: &str, output: String) -> Result<String, BackendError> {
    if output.trim().is_empty() {
        return Err(BackendError::Empty);
    }
    let produced = scan_numerals(&output);
    for n in scan_numerals(input) {
        if !produced
            .iter()
            .any(|p| p.percent == n.percent && p.value == n.value)
        {
            return Err(BackendError::DroppedNumeral(n.text));
        }
    }
    Ok(output)
}
