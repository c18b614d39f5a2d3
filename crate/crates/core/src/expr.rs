//! Expression trees for acceptance conditions.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Named quantities that may appear as expression leaves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symbol {
    /// Normalized session time `t`.
    Time,
    /// The opponent's current offer.
    Offer,
    /// The bid our agent would propose next.
    NextOwnBid,
    /// Bids received from the opponent so far.
    History,
    /// Externally supplied dynamic threshold.
    DynamicThreshold,
    /// Configured fixed threshold.
    FixedThreshold,
}

impl Symbol {
    pub fn name(self) -> &'static str {
        match self {
            Symbol::Time => "t",
            Symbol::Offer => "offer",
            Symbol::NextOwnBid => "next_own",
            Symbol::History => "history",
            Symbol::DynamicThreshold => "u_dyn",
            Symbol::FixedThreshold => "u_fixed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FunctionName {
    #[serde(rename = "max")]
    Max,
    /// Quantile of the utilities of the opponent's bid history.
    #[serde(rename = "Q")]
    Quantile,
    /// Our own utility function.
    #[serde(rename = "U")]
    OwnUtility,
}

impl FunctionName {
    pub fn name(self) -> &'static str {
        match self {
            FunctionName::Max => "max",
            FunctionName::Quantile => "Q",
            FunctionName::OwnUtility => "U",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompareOp {
    Ge,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Ge => "≥",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MathExpr {
    Constant {
        value: f64,
    },
    Symbol {
        name: Symbol,
    },
    Sum {
        children: Vec<MathExpr>,
    },
    Product {
        children: Vec<MathExpr>,
    },
    Apply {
        name: FunctionName,
        children: Vec<MathExpr>,
    },
    Compare {
        op: CompareOp,
        lhs: Box<MathExpr>,
        rhs: Box<MathExpr>,
    },
}

impl MathExpr {
    pub fn constant(value: f64) -> Self {
        MathExpr::Constant { value }
    }

    pub fn symbol(name: Symbol) -> Self {
        MathExpr::Symbol { name }
    }

    pub fn apply(name: FunctionName, children: Vec<MathExpr>) -> Self {
        MathExpr::Apply { name, children }
    }

    pub fn children(&self) -> Vec<&MathExpr> {
        match self {
            MathExpr::Constant { .. } | MathExpr::Symbol { .. } => Vec::new(),
            MathExpr::Sum { children }
            | MathExpr::Product { children }
            | MathExpr::Apply { children, .. } => children.iter().collect(),
            MathExpr::Compare { lhs, rhs, .. } => vec![lhs, rhs],
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }
}

/// Mathematical notation, used in expert-facing explanations.
impl fmt::Display for MathExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MathExpr::Constant { value } => write!(f, "{value}"),
            MathExpr::Symbol { name } => f.write_str(match name {
                Symbol::Time => "t",
                Symbol::Offer => "ω_t^o",
                Symbol::NextOwnBid => "ω_t",
                Symbol::History => "Ω^o_t",
                Symbol::DynamicThreshold => "ū_t",
                Symbol::FixedThreshold => "u",
            }),
            MathExpr::Sum { children } => {
                for (i, c) in children.iter().enumerate() {
                    match c {
                        MathExpr::Constant { value } if i > 0 && value.is_sign_negative() => {
                            write!(f, " + ({value})")?;
                        }
                        _ if i > 0 => write!(f, " + {c}")?,
                        _ => write!(f, "{c}")?,
                    }
                }
                Ok(())
            }
            MathExpr::Product { children } => {
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        f.write_str("·")?;
                    }
                    write!(f, "{c}")?;
                }
                Ok(())
            }
            MathExpr::Apply { name, children } => {
                match name {
                    FunctionName::Max => f.write_str("max(")?,
                    FunctionName::Quantile => f.write_str("Q_{U(Ω^o_t)}(")?,
                    FunctionName::OwnUtility => f.write_str("U_u(")?,
                }
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str(")")
            }
            MathExpr::Compare { op, lhs, rhs } => write!(f, "{lhs} {} {rhs}", op.symbol()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_linear_quantile() {
        let linear = MathExpr::Sum {
            children: vec![
                MathExpr::Product {
                    children: vec![MathExpr::constant(-0.2), MathExpr::symbol(Symbol::Time)],
                },
                MathExpr::constant(0.22),
            ],
        };
        let q = MathExpr::apply(FunctionName::Quantile, vec![linear]);
        assert_eq!(q.to_string(), "Q_{U(Ω^o_t)}(-0.2·t + 0.22)");
        assert_eq!(q.size(), 6);
        let neg = MathExpr::Sum {
            children: vec![MathExpr::symbol(Symbol::Time), MathExpr::constant(-0.05)],
        };
        assert_eq!(neg.to_string(), "t + (-0.05)");
    }
}
