use crate::expr::{FunctionName, MathExpr, Symbol};
use serde::Serialize;
use std::collections::BTreeSet;

/// Variables, constants, functions and operators of an expression, plus
/// the expression itself as the structure tree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParsedUnits {
    pub variables: BTreeSet<String>,
    /// Distinct constants in first-seen order.
    pub constants: Vec<f64>,
    pub functions: BTreeSet<String>,
    pub operators: BTreeSet<String>,
    pub structure: MathExpr,
}

/// Classify every element of `expr` by a full tree walk.
pub fn decompose(expr: &MathExpr) -> ParsedUnits {
    let mut units = ParsedUnits {
        variables: BTreeSet::new(),
        constants: Vec::new(),
        functions: BTreeSet::new(),
        operators: BTreeSet::new(),
        structure: expr.clone(),
    };
    walk(expr, &mut units);
    units
}

fn walk(expr: &MathExpr, units: &mut ParsedUnits) {
    match expr {
        MathExpr::Constant { value } => {
            if !units.constants.iter().any(|c| c.to_bits() == value.to_bits()) {
                units.constants.push(*value);
            }
        }
        MathExpr::Symbol { name } => {
            units.variables.insert(name.name().to_string());
        }
        MathExpr::Sum { .. } => {
            units.operators.insert("+".into());
        }
        MathExpr::Product { .. } => {
            units.operators.insert("·".into());
        }
        MathExpr::Apply { name, children } => {
            units.functions.insert(name.name().to_string());
            match name {
                // U(x) is itself a quantity the explanation talks about.
                FunctionName::OwnUtility => {
                    if let [MathExpr::Symbol { name: arg }] = children.as_slice() {
                        units.variables.insert(format!("U({})", arg.name()));
                    }
                }
                // Q ranges over the opponent's bid history.
                FunctionName::Quantile => {
                    units.variables.insert(Symbol::History.name().to_string());
                }
                FunctionName::Max => {}
            }
        }
        MathExpr::Compare { op, .. } => {
            units.operators.insert(op.symbol().to_string());
        }
    }
    for child in expr.children() {
        walk(child, units);
    }
}
