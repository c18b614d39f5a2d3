//! `.nst` strategy template parsing.
//!
//! ```text
//! template := ("acceptance"|"bidding") "template" STRING "{" phase+ "}"
//! phase    := "phase" "[" number "," number (")"|"]") "{" (acceptRule | bidRule+) "}"
//! acceptRule := "accept" "if" "U" "(" "offer" ")" ">=" expr
//! bidRule  := ("bid"|"skip") tactic
//! tactic   := "boulware" ["(" number "," number "," number ")"]
//!           | "pareto" "(" linear ")" | "opponent_greedy" | "random_above_threshold"
//! expr     := "max" "(" expr ("," expr)+ ")" | "Q" "(" linear ")"
//!           | "u_dyn" | "u_fixed" | "U" "(" "next_own" ")" | number
//! linear   := number ["*" "t" [("+"|"-") number]]
//! number   := ["-"] NUMBER
//! ```
//!
//! `bid` marks a selected choice, `skip` an available but unselected one.

mod decompose;
mod json;
mod lexer;

pub use decompose::{decompose, ParsedUnits};
pub use json::{template_json, TemplateDocument};
pub use lexer::{tokenize, Token, TokenKind};

use crate::template::{
    AcceptanceTactic, BidChoice, BiddingTactic, BoulwareParams, LinearTerm, Phase, PhaseRule,
    StrategyTemplate, StructureError, TemplateKind, ThresholdExpr,
};
use serde::Serialize;
use std::fmt;
use thiserror::Error;

/// 1-based line/column plus byte offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Span {
    pub line: usize,
    pub column: usize,
    pub offset: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("{span}: syntax error: expected {expected}, found {found}")]
    Syntax {
        span: Span,
        expected: String,
        found: String,
    },
    #[error("{span}: {message}")]
    Structure { span: Span, message: String },
}

impl ParseError {
    pub fn span(&self) -> Span {
        match self {
            ParseError::Syntax { span, .. } | ParseError::Structure { span, .. } => *span,
        }
    }
}

const MAX_NESTING: usize = 64;

/// Parse DSL text into a validated template.
pub fn parse_template(source: &str) -> Result<StrategyTemplate, ParseError> {
    let tokens = tokenize(source)?;
    Parser { tokens, pos: 0 }.template()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if tok.kind != TokenKind::Eof {
            self.pos += 1;
        }
        tok
    }

    fn at(&self, lexeme: &str) -> bool {
        let tok = self.peek();
        tok.kind != TokenKind::Str && tok.kind != TokenKind::Eof && tok.lexeme == lexeme
    }

    fn error(&self, expected: impl Into<String>) -> ParseError {
        let tok = self.peek();
        let found = match tok.kind {
            TokenKind::Eof => "end of input".to_string(),
            TokenKind::Str => format!("string \"{}\"", tok.lexeme),
            _ => format!("`{}`", tok.lexeme),
        };
        ParseError::Syntax {
            span: tok.span,
            expected: expected.into(),
            found,
        }
    }

    fn expect(&mut self, lexeme: &str) -> Result<Token, ParseError> {
        if self.at(lexeme) {
            Ok(self.next())
        } else {
            Err(self.error(format!("`{lexeme}`")))
        }
    }

    fn template(&mut self) -> Result<StrategyTemplate, ParseError> {
        let kind = if self.at("acceptance") {
            TemplateKind::Acceptance
        } else if self.at("bidding") {
            TemplateKind::Bidding
        } else {
            return Err(self.error("`acceptance` or `bidding`"));
        };
        self.next();
        self.expect("template")?;
        if self.peek().kind != TokenKind::Str {
            return Err(self.error("template name string"));
        }
        let name = self.next().lexeme;
        self.expect("{")?;

        let mut phases = Vec::new();
        let mut spans = Vec::new();
        let mut closings = Vec::new();
        while self.at("phase") {
            let span = self.next().span;
            let (phase, close) = self.phase()?;
            phases.push(phase);
            spans.push(span);
            closings.push(close);
        }
        if phases.is_empty() {
            return Err(self.error("`phase`"));
        }
        let close_brace = self.expect("}")?;
        if self.peek().kind != TokenKind::Eof {
            return Err(self.error("end of input"));
        }

        let last = closings.len() - 1;
        for (i, &(bracket, span)) in closings.iter().enumerate() {
            let wanted = if i == last { ']' } else { ')' };
            if bracket != wanted {
                let message = if i == last {
                    "the final phase must be closed at the session end with `]`"
                } else {
                    "only the final phase may be closed with `]`; use `)`"
                };
                return Err(ParseError::Structure {
                    span,
                    message: format!("phase {}: {message}", i + 1),
                });
            }
        }

        StrategyTemplate::new(kind, name, phases).map_err(|err| {
            let span = structure_phase(&err)
                .and_then(|i| spans.get(i).copied())
                .unwrap_or(close_brace.span);
            ParseError::Structure {
                span,
                message: err.to_string(),
            }
        })
    }

    fn phase(&mut self) -> Result<(Phase, (char, Span)), ParseError> {
        self.expect("[")?;
        let start = self.number()?;
        self.expect(",")?;
        let end = self.number()?;
        let close = if self.at(")") || self.at("]") {
            let tok = self.next();
            (tok.lexeme.chars().next().unwrap_or(')'), tok.span)
        } else {
            return Err(self.error("`)` or `]`"));
        };
        self.expect("{")?;
        let rule = if self.at("accept") {
            self.next();
            self.expect("if")?;
            self.expect("U")?;
            self.expect("(")?;
            self.expect("offer")?;
            self.expect(")")?;
            self.expect(">=")?;
            PhaseRule::Accept {
                threshold: self.threshold(0)?,
            }
        } else if self.at("bid") || self.at("skip") {
            let mut choices = Vec::new();
            while self.at("bid") || self.at("skip") {
                let selected = self.next().lexeme == "bid";
                let tactic = self.bid_tactic()?;
                choices.push(BidChoice { tactic, selected });
            }
            PhaseRule::Bid { choices }
        } else {
            return Err(self.error("`accept`, `bid` or `skip`"));
        };
        self.expect("}")?;
        Ok((Phase { start, end, rule }, close))
    }

    fn threshold(&mut self, depth: usize) -> Result<ThresholdExpr, ParseError> {
        if depth > MAX_NESTING {
            return Err(self.error("shallower nesting of max()"));
        }
        if self.at("max") {
            self.next();
            self.expect("(")?;
            let mut args = vec![self.threshold(depth + 1)?];
            while self.at(",") {
                self.next();
                args.push(self.threshold(depth + 1)?);
            }
            if args.len() < 2 {
                return Err(self.error("`,` (max needs at least two arguments)"));
            }
            self.expect(")")?;
            Ok(ThresholdExpr::Max { args })
        } else if self.at("Q") {
            self.next();
            self.expect("(")?;
            let p = self.linear()?;
            self.expect(")")?;
            Ok(ThresholdExpr::tactic(AcceptanceTactic::QuantileConcession { p }))
        } else if self.at("u_dyn") {
            self.next();
            Ok(ThresholdExpr::tactic(AcceptanceTactic::DynamicThreshold))
        } else if self.at("u_fixed") {
            self.next();
            Ok(ThresholdExpr::tactic(AcceptanceTactic::FixedThreshold { value: None }))
        } else if self.at("U") {
            self.next();
            self.expect("(")?;
            self.expect("next_own")?;
            self.expect(")")?;
            Ok(ThresholdExpr::tactic(AcceptanceTactic::OwnNextBidUtility))
        } else if self.at("-") || self.peek().kind == TokenKind::Number {
            let value = self.number()?;
            Ok(ThresholdExpr::tactic(AcceptanceTactic::FixedThreshold {
                value: Some(value),
            }))
        } else {
            Err(self.error("a threshold (max, Q, u_dyn, u_fixed, U(next_own) or a number)"))
        }
    }

    fn bid_tactic(&mut self) -> Result<BiddingTactic, ParseError> {
        if self.at("boulware") {
            self.next();
            let params = if self.at("(") {
                self.next();
                let e = self.number()?;
                self.expect(",")?;
                let u_min = self.number()?;
                self.expect(",")?;
                let u_max = self.number()?;
                self.expect(")")?;
                Some(BoulwareParams { e, u_min, u_max })
            } else {
                None
            };
            Ok(BiddingTactic::Boulware { params })
        } else if self.at("pareto") {
            self.next();
            self.expect("(")?;
            let weight = self.linear()?;
            self.expect(")")?;
            Ok(BiddingTactic::ParetoWeighted { weight })
        } else if self.at("opponent_greedy") {
            self.next();
            Ok(BiddingTactic::OpponentGreedy)
        } else if self.at("random_above_threshold") {
            self.next();
            Ok(BiddingTactic::RandomAboveThreshold)
        } else {
            Err(self.error("a bidding tactic"))
        }
    }

    fn linear(&mut self) -> Result<LinearTerm, ParseError> {
        let first = self.number()?;
        if !self.at("*") {
            return Ok(LinearTerm::Constant { value: first });
        }
        self.next();
        self.expect("t")?;
        let intercept = if self.at("+") {
            self.next();
            Some(self.number()?)
        } else if self.at("-") {
            self.next();
            Some(-self.unsigned()?)
        } else {
            None
        };
        Ok(LinearTerm::Affine {
            slope: first,
            intercept,
        })
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        if self.at("-") {
            self.next();
            return Ok(-self.unsigned()?);
        }
        self.unsigned()
    }

    fn unsigned(&mut self) -> Result<f64, ParseError> {
        if self.peek().kind != TokenKind::Number {
            return Err(self.error("a number"));
        }
        let tok = self.next();
        match tok.lexeme.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(ParseError::Structure {
                span: tok.span,
                message: format!("constant `{}` is not a finite number", tok.lexeme),
            }),
        }
    }
}

fn structure_phase(err: &StructureError) -> Option<usize> {
    match *err {
        StructureError::NoPhases | StructureError::BadStart(_) => Some(0),
        StructureError::BadEnd(_) => None,
        StructureError::Gap { phase, .. }
        | StructureError::Overlap { phase, .. }
        | StructureError::EmptyPhase { phase, .. }
        | StructureError::NoSelectedTactic { phase }
        | StructureError::OutOfRange { phase, .. }
        | StructureError::NonFinite { phase, .. }
        | StructureError::DegenerateMax { phase }
        | StructureError::KindMismatch { phase, .. }
        | StructureError::BadBoulware { phase } => Some(phase),
    }
}
