//! End-to-end explanation: parse, annotate, realize, enrich, customize,
//! then validate with a bounded refinement loop.

use crate::enrich::{enrich, EnrichWarning, RefinementBackend};
use crate::parser::{parse_template, ParseError};
use crate::realizer::{customize, realize, Audience, Explanation, RealizeError, RuleSet};
use crate::semantic::{annotate, AnnotateError};
use crate::template::StrategyTemplate;
use crate::validation::{refine, validate, ValidationReport};
use serde::Serialize;
use std::time::{Duration, Instant};
use thiserror::Error;

pub const DEFAULT_MAX_ROUNDS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Parse,
    Semantics,
    Realize,
    Enrich,
    Customize,
    Validate,
    Refine,
}

/// Called after each stage completes.
pub trait StageObserver {
    fn stage_done(&mut self, stage: Stage, elapsed: Duration);
}

impl StageObserver for () {
    fn stage_done(&mut self, _: Stage, _: Duration) {}
}

impl StageObserver for Vec<Stage> {
    fn stage_done(&mut self, stage: Stage, _: Duration) {
        self.push(stage);
    }
}

#[derive(Debug, Error)]
pub enum ExplainError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Annotate(#[from] AnnotateError),
    #[error(transparent)]
    Realize(#[from] RealizeError),
    #[error("explanation still invalid after {rounds} refinement round(s)")]
    ValidationExhausted {
        rounds: usize,
        report: Box<ValidationReport>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidatedExplanation {
    pub explanation: Explanation,
    pub report: ValidationReport,
    pub refinement_rounds: usize,
    pub warnings: Vec<EnrichWarning>,
}

/// Explanation pipeline with its rule set and refinement backend.
pub struct Explainer<'a> {
    rules: RuleSet,
    backend: &'a dyn RefinementBackend,
    max_rounds: usize,
}

impl<'a> Explainer<'a> {
    pub fn new(backend: &'a dyn RefinementBackend) -> Self {
        Explainer {
            rules: RuleSet::default_rules(),
            backend,
            max_rounds: DEFAULT_MAX_ROUNDS,
        }
    }

    pub fn with_rules(mut self, rules: RuleSet) -> Self {
        self.rules = rules;
        self
    }

    pub fn with_max_rounds(mut self, rounds: usize) -> Self {
        self.max_rounds = rounds;
        self
    }

    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }

    pub fn explain_source(
        &self,
        source: &str,
        audience: Audience,
        observer: &mut dyn StageObserver,
    ) -> Result<ValidatedExplanation, ExplainError> {
        let start = Instant::now();
        let template = parse_template(source)?;
        observer.stage_done(Stage::Parse, start.elapsed());
        self.explain_template(&template, audience, observer)
    }

    pub fn explain_template(
        &self,
        template: &StrategyTemplate,
        audience: Audience,
        observer: &mut dyn StageObserver,
    ) -> Result<ValidatedExplanation, ExplainError> {
        let mut clock = Instant::now();
        let mut lap = |observer: &mut dyn StageObserver, stage| {
            observer.stage_done(stage, clock.elapsed());
            clock = Instant::now();
        };

        let semrep = annotate(template)?;
        lap(observer, Stage::Semantics);
        let basic = realize(template, &semrep, &self.rules)?;
        lap(observer, Stage::Realize);
        let enriched = enrich(&basic, &semrep, self.backend);
        lap(observer, Stage::Enrich);
        let mut explanation = customize(&enriched.explanation, audience);
        lap(observer, Stage::Customize);
        let mut report = validate(&explanation, template);
        lap(observer, Stage::Validate);

        let mut rounds = 0;
        while !report.passed {
            if rounds == self.max_rounds {
                return Err(ExplainError::ValidationExhausted {
                    rounds,
                    report: Box::new(report),
                });
            }
            explanation = refine(&explanation, &report, template, &self.rules)?;
            lap(observer, Stage::Refine);
            report = validate(&explanation, template);
            lap(observer, Stage::Validate);
            rounds += 1;
        }
        Ok(ValidatedExplanation {
            explanation,
            report,
            refinement_rounds: rounds,
            warnings: enriched.warnings,
        })
    }
}

/// Explain template source text with the default rules.
pub fn explain_strategy(
    source: &str,
    audience: Audience,
    backend: &dyn RefinementBackend,
) -> Result<ValidatedExplanation, ExplainError> {
    Explainer::new(backend).explain_source(source, audience, &mut ())
}
