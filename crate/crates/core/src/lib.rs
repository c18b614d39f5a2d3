//! Parse, execute and explain phased negotiation strategy templates.
//!
//! A strategy template splits a negotiation session into time phases and
//! assigns each phase a combination of acceptance tactics or a prioritized
//! list of bidding tactics. This crate parses the `.nst` template language,
//! runs templates in an alternating-offers simulation, and turns them into
//! validated English explanations for expert or lay readers.

pub mod cli;
pub mod domain;
pub mod engine;
pub mod enrich;
pub mod expr;
pub mod parser;
pub mod pipeline;
pub mod realizer;
pub mod scenario;
pub mod semantic;
pub mod template;
pub mod validation;

pub use domain::{AgentState, Bid, NegotiationDomain, UtilityModel};
pub use expr::MathExpr;
pub use enrich::{enrich, OfflineBackend, PassthroughBackend, RefinementBackend, RemoteBackend};
pub use parser::{decompose, parse_template, ParseError, ParsedUnits};
pub use pipeline::{explain_strategy, Explainer, ExplainError, ValidatedExplanation};
pub use realizer::{customize, realize, Audience, Explanation, RuleSet, Segment};
pub use semantic::{annotate, SemanticRep, SemanticRole};
pub use template::{Phase, StrategyTemplate, TemplateKind};
pub use validation::{refine, validate, ValidationReport};
