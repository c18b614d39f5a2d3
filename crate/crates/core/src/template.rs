//! Phased strategy templates: the typed AST shared by the parser, the
//! explanation pipeline and the negotiation engine.

use crate::expr::{CompareOp, FunctionName, MathExpr, Symbol};
use serde::{Deserialize, Serialize};
use std::fmt::{self, Write as _};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateKind {
    Acceptance,
    Bidding,
}

impl TemplateKind {
    pub fn keyword(self) -> &'static str {
        match self {
            TemplateKind::Acceptance => "acceptance",
            TemplateKind::Bidding => "bidding",
        }
    }
}

/// `a·t + b`, remembering which parts were written.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum LinearTerm {
    Constant { value: f64 },
    Affine { slope: f64, intercept: Option<f64> },
}

impl LinearTerm {
    pub fn affine(slope: f64, intercept: f64) -> Self {
        LinearTerm::Affine {
            slope,
            intercept: Some(intercept),
        }
    }

    pub fn slope(&self) -> f64 {
        match *self {
            LinearTerm::Constant { .. } => 0.0,
            LinearTerm::Affine { slope, .. } => slope,
        }
    }

    pub fn intercept(&self) -> f64 {
        match *self {
            LinearTerm::Constant { value } => value,
            LinearTerm::Affine { intercept, .. } => intercept.unwrap_or(0.0),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.slope() * t + self.intercept()
    }

    /// The numbers that appear when the term is written out.
    pub fn written_constants(&self) -> Vec<f64> {
        match *self {
            LinearTerm::Constant { value } => vec![value],
            LinearTerm::Affine { slope, intercept } => {
                let mut v = vec![slope];
                v.extend(intercept);
                v
            }
        }
    }

    pub fn to_expr(&self) -> MathExpr {
        match *self {
            LinearTerm::Constant { value } => MathExpr::constant(value),
            LinearTerm::Affine { slope, intercept } => {
                let product = MathExpr::Product {
                    children: vec![MathExpr::constant(slope), MathExpr::symbol(Symbol::Time)],
                };
                match intercept {
                    Some(b) => MathExpr::Sum {
                        children: vec![product, MathExpr::constant(b)],
                    },
                    None => product,
                }
            }
        }
    }

    fn write_dsl(&self, out: &mut String) {
        match *self {
            LinearTerm::Constant { value } => {
                let _ = write!(out, "{value}");
            }
            LinearTerm::Affine { slope, intercept } => {
                let _ = write!(out, "{slope}*t");
                if let Some(b) = intercept {
                    if b.is_sign_negative() {
                        let _ = write!(out, " - {}", -b);
                    } else {
                        let _ = write!(out, " + {b}");
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tactic", rename_all = "snake_case")]
pub enum AcceptanceTactic {
    /// Utility of the bid we would propose next.
    OwnNextBidUtility,
    /// Quantile of received utilities at `p = a·t + b`.
    QuantileConcession { p: LinearTerm },
    DynamicThreshold,
    /// `None` takes the threshold from configuration.
    FixedThreshold { value: Option<f64> },
}

/// Right-hand side of an acceptance rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThresholdExpr {
    Max { args: Vec<ThresholdExpr> },
    Tactic { tactic: AcceptanceTactic },
}

impl ThresholdExpr {
    pub fn tactic(tactic: AcceptanceTactic) -> Self {
        ThresholdExpr::Tactic { tactic }
    }

    /// Selected tactics in source order, with nested `max` flattened.
    pub fn tactics(&self) -> Vec<AcceptanceTactic> {
        let mut out = Vec::new();
        self.collect_tactics(&mut out);
        out
    }

    fn collect_tactics(&self, out: &mut Vec<AcceptanceTactic>) {
        match self {
            ThresholdExpr::Max { args } => args.iter().for_each(|a| a.collect_tactics(out)),
            ThresholdExpr::Tactic { tactic } => out.push(*tactic),
        }
    }

    pub fn to_expr(&self) -> MathExpr {
        match self {
            ThresholdExpr::Max { args } => {
                MathExpr::apply(FunctionName::Max, args.iter().map(|a| a.to_expr()).collect())
            }
            ThresholdExpr::Tactic { tactic } => match tactic {
                AcceptanceTactic::OwnNextBidUtility => MathExpr::apply(
                    FunctionName::OwnUtility,
                    vec![MathExpr::symbol(Symbol::NextOwnBid)],
                ),
                AcceptanceTactic::QuantileConcession { p } => {
                    MathExpr::apply(FunctionName::Quantile, vec![p.to_expr()])
                }
                AcceptanceTactic::DynamicThreshold => MathExpr::symbol(Symbol::DynamicThreshold),
                AcceptanceTactic::FixedThreshold { value: Some(v) } => MathExpr::constant(*v),
                AcceptanceTactic::FixedThreshold { value: None } => {
                    MathExpr::symbol(Symbol::FixedThreshold)
                }
            },
        }
    }

    fn write_dsl(&self, out: &mut String) {
        match self {
            ThresholdExpr::Max { args } => {
                out.push_str("max(");
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    a.write_dsl(out);
                }
                out.push(')');
            }
            ThresholdExpr::Tactic { tactic } => match tactic {
                AcceptanceTactic::OwnNextBidUtility => out.push_str("U(next_own)"),
                AcceptanceTactic::QuantileConcession { p } => {
                    out.push_str("Q(");
                    p.write_dsl(out);
                    out.push(')');
                }
                AcceptanceTactic::DynamicThreshold => out.push_str("u_dyn"),
                AcceptanceTactic::FixedThreshold { value: Some(v) } => {
                    let _ = write!(out, "{v}");
                }
                AcceptanceTactic::FixedThreshold { value: None } => out.push_str("u_fixed"),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoulwareParams {
    pub e: f64,
    pub u_min: f64,
    pub u_max: f64,
}

impl Default for BoulwareParams {
    fn default() -> Self {
        BoulwareParams {
            e: 0.2,
            u_min: 0.4,
            u_max: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tactic", rename_all = "snake_case")]
pub enum BiddingTactic {
    /// `None` uses the configured Boulware parameters.
    Boulware { params: Option<BoulwareParams> },
    /// TOPSIS pick from the Pareto front with own-utility weight `a·t + b`.
    ParetoWeighted { weight: LinearTerm },
    OpponentGreedy,
    RandomAboveThreshold,
}

impl BiddingTactic {
    pub fn keyword(&self) -> &'static str {
        match self {
            BiddingTactic::Boulware { .. } => "boulware",
            BiddingTactic::ParetoWeighted { .. } => "pareto",
            BiddingTactic::OpponentGreedy => "opponent_greedy",
            BiddingTactic::RandomAboveThreshold => "random_above_threshold",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BidChoice {
    pub tactic: BiddingTactic,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhaseRule {
    Accept { threshold: ThresholdExpr },
    Bid { choices: Vec<BidChoice> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Phase {
    pub start: f64,
    pub end: f64,
    pub rule: PhaseRule,
}

impl Phase {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_initial(&self) -> bool {
        self.start == 0.0
    }

    pub fn is_final(&self) -> bool {
        self.end == 1.0
    }

    /// Acceptance tactics of this phase (empty for bidding phases).
    pub fn acceptance_tactics(&self) -> Vec<AcceptanceTactic> {
        match &self.rule {
            PhaseRule::Accept { threshold } => threshold.tactics(),
            PhaseRule::Bid { .. } => Vec::new(),
        }
    }

    /// The first selected bidding tactic, which is the one that runs.
    pub fn primary_bid_tactic(&self) -> Option<BiddingTactic> {
        match &self.rule {
            PhaseRule::Bid { choices } => choices.iter().find(|c| c.selected).map(|c| c.tactic),
            PhaseRule::Accept { .. } => None,
        }
    }

    /// `U(offer) ≥ threshold` for acceptance phases.
    pub fn condition(&self) -> Option<MathExpr> {
        match &self.rule {
            PhaseRule::Accept { threshold } => Some(MathExpr::Compare {
                op: CompareOp::Ge,
                lhs: Box::new(MathExpr::apply(
                    FunctionName::OwnUtility,
                    vec![MathExpr::symbol(Symbol::Offer)],
                )),
                rhs: Box::new(threshold.to_expr()),
            }),
            PhaseRule::Bid { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StructureError {
    #[error("template has no phases")]
    NoPhases,
    #[error("first phase must start at 0, found {0}")]
    BadStart(f64),
    #[error("last phase must end at 1, found {0}")]
    BadEnd(f64),
    #[error("gap at {at}: phase {phase} starts at {next_start}")]
    Gap { phase: usize, at: f64, next_start: f64 },
    #[error("overlap at {at}: phase {phase} starts at {next_start}")]
    Overlap { phase: usize, at: f64, next_start: f64 },
    #[error("phase {phase} is empty: [{start}, {end})")]
    EmptyPhase { phase: usize, start: f64, end: f64 },
    #[error("phase {phase} has no selected tactic")]
    NoSelectedTactic { phase: usize },
    #[error("phase {phase}: {what} must be within [{lo}, {hi}], found {value}")]
    OutOfRange {
        phase: usize,
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("phase {phase}: {what} must be finite")]
    NonFinite { phase: usize, what: &'static str },
    #[error("phase {phase}: max() needs at least two arguments")]
    DegenerateMax { phase: usize },
    #[error("phase {phase}: {found} rule inside a {kind} template")]
    KindMismatch {
        phase: usize,
        kind: &'static str,
        found: &'static str,
    },
    #[error("boulware parameters must satisfy e > 0 and 0 <= u_min < u_max <= 1 (phase {phase})")]
    BadBoulware { phase: usize },
}

/// A validated, immutable strategy template.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyTemplate {
    kind: TemplateKind,
    name: String,
    phases: Vec<Phase>,
}

impl StrategyTemplate {
    pub fn new(
        kind: TemplateKind,
        name: impl Into<String>,
        phases: Vec<Phase>,
    ) -> Result<Self, StructureError> {
        validate_phases(kind, &phases)?;
        Ok(StrategyTemplate {
            kind,
            name: name.into(),
            phases,
        })
    }

    pub fn kind(&self) -> TemplateKind {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    /// Index of the phase covering `t`. Intervals are half-open except the
    /// last, which is closed at 1; `t` is clamped into `[0, 1]`.
    pub fn phase_index_at(&self, t: f64) -> usize {
        let t = t.clamp(0.0, 1.0);
        self.phases
            .iter()
            .position(|p| t >= p.start && t < p.end)
            .unwrap_or(self.phases.len() - 1)
    }

    pub fn phase_at(&self, t: f64) -> &Phase {
        &self.phases[self.phase_index_at(t)]
    }

    /// Canonical DSL text; parsing it yields an equal template.
    pub fn pretty_print(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} template {} {{",
            self.kind.keyword(),
            quote(&self.name)
        );
        let last = self.phases.len() - 1;
        for (i, phase) in self.phases.iter().enumerate() {
            let close = if i == last { ']' } else { ')' };
            let _ = writeln!(out, "  phase [{}, {}{close} {{", phase.start, phase.end);
            match &phase.rule {
                PhaseRule::Accept { threshold } => {
                    out.push_str("    accept if U(offer) >= ");
                    threshold.write_dsl(&mut out);
                    out.push('\n');
                }
                PhaseRule::Bid { choices } => {
                    for choice in choices {
                        out.push_str(if choice.selected { "    bid " } else { "    skip " });
                        write_bid_tactic(&choice.tactic, &mut out);
                        out.push('\n');
                    }
                }
            }
            out.push_str("  }\n");
        }
        out.push_str("}\n");
        out
    }

    /// Every template node in a fixed pre-order: per phase, the interval
    /// node, then the rule's nodes.
    pub fn nodes(&self) -> Vec<(NodeId, NodeRef<'_>)> {
        let mut out = Vec::new();
        for (pi, phase) in self.phases.iter().enumerate() {
            let base = NodeId::phase(pi);
            out.push((base.child("interval"), NodeRef::Interval { phase: pi }));
            match &phase.rule {
                PhaseRule::Accept { threshold } => {
                    let pred = base.child("accept");
                    out.push((pred.clone(), NodeRef::Predicate { phase: pi, threshold }));
                    out.push((pred.child("offer"), NodeRef::OfferUtility { phase: pi }));
                    push_threshold_nodes(pred.child("threshold"), threshold, &mut out);
                }
                PhaseRule::Bid { choices } => {
                    let primary = choices.iter().position(|c| c.selected);
                    for (ci, choice) in choices.iter().enumerate() {
                        let id = base.child("bid").child(&ci.to_string());
                        out.push((
                            id.clone(),
                            NodeRef::BidChoice {
                                phase: pi,
                                index: ci,
                                choice,
                                primary: primary == Some(ci),
                            },
                        ));
                        if let BiddingTactic::ParetoWeighted { weight } = &choice.tactic {
                            out.push((
                                id.child("linear"),
                                NodeRef::Linear {
                                    term: weight,
                                    owner: LinearOwner::ParetoWeight,
                                },
                            ));
                        }
                    }
                }
            }
        }
        out
    }

    /// Numbers a faithful explanation has to mention, keyed by the node that
    /// owns them. The session endpoints 0 and 1 are fixed by construction
    /// and are not listed; interior boundaries appear once per adjacent phase.
    pub fn constants(&self) -> Vec<TemplateConstant> {
        let mut out = Vec::new();
        for (id, node) in self.nodes() {
            match node {
                NodeRef::Interval { phase } => {
                    let p = &self.phases[phase];
                    for v in [p.start, p.end] {
                        if v != 0.0 && v != 1.0 {
                            out.push(TemplateConstant {
                                node: id.clone(),
                                value: v,
                                kind: ConstantKind::Boundary,
                            });
                        }
                    }
                }
                NodeRef::Linear { term, .. } => {
                    for v in term.written_constants() {
                        out.push(TemplateConstant {
                            node: id.clone(),
                            value: v,
                            kind: ConstantKind::Parameter,
                        });
                    }
                }
                NodeRef::Acceptance(AcceptanceTactic::FixedThreshold { value: Some(v) }) => {
                    out.push(TemplateConstant {
                        node: id.clone(),
                        value: *v,
                        kind: ConstantKind::Parameter,
                    });
                }
                NodeRef::BidChoice { choice, .. } => {
                    if let BiddingTactic::Boulware { params: Some(p) } = choice.tactic {
                        for v in [p.e, p.u_min, p.u_max] {
                            out.push(TemplateConstant {
                                node: id.clone(),
                                value: v,
                                kind: ConstantKind::Parameter,
                            });
                        }
                    }
                }
                _ => {}
            }
        }
        out
    }
}

impl fmt::Display for StrategyTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pretty_print())
    }
}

fn push_threshold_nodes<'a>(
    id: NodeId,
    expr: &'a ThresholdExpr,
    out: &mut Vec<(NodeId, NodeRef<'a>)>,
) {
    match expr {
        ThresholdExpr::Max { args } => {
            out.push((id.clone(), NodeRef::Combinator { args }));
            for (i, a) in args.iter().enumerate() {
                push_threshold_nodes(id.child(&i.to_string()), a, out);
            }
        }
        ThresholdExpr::Tactic { tactic } => {
            out.push((id.clone(), NodeRef::Acceptance(tactic)));
            if let AcceptanceTactic::QuantileConcession { p } = tactic {
                out.push((
                    id.child("linear"),
                    NodeRef::Linear {
                        term: p,
                        owner: LinearOwner::QuantileLevel,
                    },
                ));
            }
        }
    }
}

fn write_bid_tactic(tactic: &BiddingTactic, out: &mut String) {
    out.push_str(tactic.keyword());
    match tactic {
        BiddingTactic::Boulware { params: Some(p) } => {
            let _ = write!(out, "({}, {}, {})", p.e, p.u_min, p.u_max);
        }
        BiddingTactic::ParetoWeighted { weight } => {
            out.push('(');
            weight.write_dsl(out);
            out.push(')');
        }
        _ => {}
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn validate_phases(kind: TemplateKind, phases: &[Phase]) -> Result<(), StructureError> {
    let first = phases.first().ok_or(StructureError::NoPhases)?;
    if first.start != 0.0 {
        return Err(StructureError::BadStart(first.start));
    }
    let last = phases.last().expect("nonempty");
    if last.end != 1.0 {
        return Err(StructureError::BadEnd(last.end));
    }
    for (i, phase) in phases.iter().enumerate() {
        for (what, v) in [("phase start", phase.start), ("phase end", phase.end)] {
            if !v.is_finite() {
                return Err(StructureError::NonFinite { phase: i, what });
            }
            check_range(i, what, v, 0.0, 1.0)?;
        }
        if phase.start >= phase.end {
            return Err(StructureError::EmptyPhase {
                phase: i,
                start: phase.start,
                end: phase.end,
            });
        }
        if let Some(next) = phases.get(i + 1) {
            if next.start > phase.end {
                return Err(StructureError::Gap {
                    phase: i + 1,
                    at: phase.end,
                    next_start: next.start,
                });
            }
            if next.start < phase.end {
                return Err(StructureError::Overlap {
                    phase: i + 1,
                    at: phase.end,
                    next_start: next.start,
                });
            }
        }
        match (&phase.rule, kind) {
            (PhaseRule::Accept { threshold }, TemplateKind::Acceptance) => {
                validate_threshold(i, threshold)?
            }
            (PhaseRule::Bid { choices }, TemplateKind::Bidding) => {
                if !choices.iter().any(|c| c.selected) {
                    return Err(StructureError::NoSelectedTactic { phase: i });
                }
                for c in choices {
                    validate_bid_tactic(i, &c.tactic)?;
                }
            }
            (PhaseRule::Accept { .. }, TemplateKind::Bidding) => {
                return Err(StructureError::KindMismatch {
                    phase: i,
                    kind: "bidding",
                    found: "accept",
                })
            }
            (PhaseRule::Bid { .. }, TemplateKind::Acceptance) => {
                return Err(StructureError::KindMismatch {
                    phase: i,
                    kind: "acceptance",
                    found: "bid",
                })
            }
        }
    }
    Ok(())
}

fn check_range(phase: usize, what: &'static str, v: f64, lo: f64, hi: f64) -> Result<(), StructureError> {
    if !v.is_finite() {
        return Err(StructureError::NonFinite { phase, what });
    }
    if v < lo || v > hi {
        return Err(StructureError::OutOfRange {
            phase,
            what,
            value: v,
            lo,
            hi,
        });
    }
    Ok(())
}

fn check_finite(phase: usize, what: &'static str, v: f64) -> Result<(), StructureError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(StructureError::NonFinite { phase, what })
    }
}

fn validate_linear(phase: usize, term: &LinearTerm) -> Result<(), StructureError> {
    for v in term.written_constants() {
        check_finite(phase, "linear coefficient", v)?;
    }
    Ok(())
}

fn validate_threshold(phase: usize, expr: &ThresholdExpr) -> Result<(), StructureError> {
    match expr {
        ThresholdExpr::Max { args } => {
            if args.len() < 2 {
                return Err(StructureError::DegenerateMax { phase });
            }
            args.iter().try_for_each(|a| validate_threshold(phase, a))
        }
        ThresholdExpr::Tactic { tactic } => match tactic {
            AcceptanceTactic::QuantileConcession { p } => validate_linear(phase, p),
            AcceptanceTactic::FixedThreshold { value: Some(v) } => {
                check_range(phase, "fixed threshold", *v, 0.0, 1.0)
            }
            _ => Ok(()),
        },
    }
}

fn validate_bid_tactic(phase: usize, tactic: &BiddingTactic) -> Result<(), StructureError> {
    match tactic {
        BiddingTactic::Boulware { params: Some(p) } => {
            for v in [p.e, p.u_min, p.u_max] {
                check_finite(phase, "boulware parameter", v)?;
            }
            if p.e <= 0.0 || p.u_min < 0.0 || p.u_min >= p.u_max || p.u_max > 1.0 {
                return Err(StructureError::BadBoulware { phase });
            }
            Ok(())
        }
        BiddingTactic::ParetoWeighted { weight } => validate_linear(phase, weight),
        _ => Ok(()),
    }
}

/// Stable path-like identity of a template node, e.g. `p0.accept.threshold.1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn phase(index: usize) -> Self {
        NodeId(format!("p{index}"))
    }

    pub fn child(&self, segment: &str) -> Self {
        NodeId(format!("{}.{segment}", self.0))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Phase index encoded in the id.
    pub fn phase_index(&self) -> Option<usize> {
        let head = self.0.split('.').next()?;
        head.strip_prefix('p')?.parse().ok()
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearOwner {
    QuantileLevel,
    ParetoWeight,
}

/// Borrowed view of one template node.
#[derive(Debug, Clone, Copy)]
pub enum NodeRef<'a> {
    Interval {
        phase: usize,
    },
    Predicate {
        phase: usize,
        threshold: &'a ThresholdExpr,
    },
    OfferUtility {
        phase: usize,
    },
    Combinator {
        args: &'a [ThresholdExpr],
    },
    Acceptance(&'a AcceptanceTactic),
    Linear {
        term: &'a LinearTerm,
        owner: LinearOwner,
    },
    BidChoice {
        phase: usize,
        index: usize,
        choice: &'a BidChoice,
        primary: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantKind {
    Boundary,
    Parameter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateConstant {
    pub node: NodeId,
    pub value: f64,
    pub kind: ConstantKind,
}
