//! Negotiation domains, bids and linear-additive utility models.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("domain has no issues")]
    NoIssues,
    #[error("issue `{0}` needs at least two values")]
    TooFewValues(String),
    #[error("bid does not fit the domain: {0}")]
    Mismatch(String),
    #[error("utility model: {0}")]
    BadModel(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub name: String,
    pub values: Vec<String>,
}

/// Discrete issues; the outcome space is their cartesian product.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NegotiationDomain {
    issues: Vec<Issue>,
}

impl NegotiationDomain {
    pub fn new(issues: Vec<Issue>) -> Result<Self, DomainError> {
        if issues.is_empty() {
            return Err(DomainError::NoIssues);
        }
        if let Some(bad) = issues.iter().find(|i| i.values.len() < 2) {
            return Err(DomainError::TooFewValues(bad.name.clone()));
        }
        Ok(NegotiationDomain { issues })
    }

    pub fn issues(&self) -> &[Issue] {
        &self.issues
    }

    pub fn value_counts(&self) -> Vec<usize> {
        self.issues.iter().map(|i| i.values.len()).collect()
    }

    /// Size of the outcome space, saturating on overflow.
    pub fn outcome_count(&self) -> usize {
        self.issues
            .iter()
            .fold(1usize, |acc, i| acc.saturating_mul(i.values.len()))
    }

    /// All bids in lexicographic order of value indices.
    pub fn bids(&self) -> BidIter {
        BidIter {
            counts: self.value_counts(),
            next: Some(vec![0; self.issues.len()]),
        }
    }

    pub fn check_bid(&self, bid: &Bid) -> Result<(), DomainError> {
        if bid.0.len() != self.issues.len() {
            return Err(DomainError::Mismatch(format!(
                "expected {} issues, got {}",
                self.issues.len(),
                bid.0.len()
            )));
        }
        for (issue, &v) in self.issues.iter().zip(&bid.0) {
            if v >= issue.values.len() {
                return Err(DomainError::Mismatch(format!(
                    "value index {v} out of range for issue `{}`",
                    issue.name
                )));
            }
        }
        Ok(())
    }

    /// Value labels of a bid, for transcripts.
    pub fn labels(&self, bid: &Bid) -> Vec<&str> {
        self.issues
            .iter()
            .zip(&bid.0)
            .map(|(i, &v)| i.values[v].as_str())
            .collect()
    }
}

pub struct BidIter {
    counts: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl Iterator for BidIter {
    type Item = Bid;

    fn next(&mut self) -> Option<Bid> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut i = succ.len();
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            succ[i] += 1;
            if succ[i] < self.counts[i] {
                self.next = Some(succ);
                break;
            }
            succ[i] = 0;
        }
        Some(Bid(current))
    }
}

/// One value index per issue.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Bid(pub Vec<usize>);

impl Bid {
    pub fn values(&self) -> &[usize] {
        &self.0
    }
}

/// `U(ω) = Σ w_i · e_i(v_i)` with weights summing to one and each issue's
/// best value evaluated at one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityModel {
    weights: Vec<f64>,
    evaluations: Vec<Vec<f64>>,
}

const WEIGHT_TOLERANCE: f64 = 1e-9;

impl UtilityModel {
    pub fn new(weights: Vec<f64>, evaluations: Vec<Vec<f64>>) -> Result<Self, DomainError> {
        if weights.len() != evaluations.len() {
            return Err(DomainError::BadModel(format!(
                "{} weights for {} issues",
                weights.len(),
                evaluations.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(DomainError::BadModel("weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(DomainError::BadModel(format!("weights sum to {total}, expected 1")));
        }
        for (i, evals) in evaluations.iter().enumerate() {
            if evals.iter().any(|e| !(0.0..=1.0).contains(e)) {
                return Err(DomainError::BadModel(format!(
                    "issue {i}: evaluations must lie in [0, 1]"
                )));
            }
            let best = evals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if best != 1.0 {
                return Err(DomainError::BadModel(format!(
                    "issue {i}: best value must evaluate to 1, found {best}"
                )));
            }
        }
        Ok(UtilityModel {
            weights,
            evaluations,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn evaluations(&self) -> &[Vec<f64>] {
        &self.evaluations
    }

    pub fn fits(&self, domain: &NegotiationDomain) -> bool {
        self.evaluations.len() == domain.issues().len()
            && self
                .evaluations
                .iter()
                .zip(domain.issues())
                .all(|(e, i)| e.len() == i.values.len())
    }

    pub fn utility(&self, bid: &Bid) -> Result<f64, DomainError> {
        if bid.0.len() != self.weights.len() {
            return Err(DomainError::Mismatch(format!(
                "expected {} issues, got {}",
                self.weights.len(),
                bid.0.len()
            )));
        }
        let mut total = 0.0;
        for ((w, evals), &v) in self.weights.iter().zip(&self.evaluations).zip(&bid.0) {
            let e = evals.get(v).ok_or_else(|| {
                DomainError::Mismatch(format!("value index {v} out of range"))
            })?;
            total += w * e;
        }
        Ok(total.clamp(0.0, 1.0))
    }

    /// The bid taking every issue's top-evaluated value.
    pub fn best_bid(&self) -> Bid {
        Bid(self
            .evaluations
            .iter()
            .map(|evals| evals.iter().position(|e| *e == 1.0).unwrap_or(0))
            .collect())
    }
}

/// Something that scores bids in `[0, 1]`.
pub trait BidScore {
    fn score(&self, bid: &Bid) -> f64;
}

impl BidScore for UtilityModel {
    fn score(&self, bid: &Bid) -> f64 {
        self.utility(bid).unwrap_or(0.0)
    }
}

/// What a tactic sees when it runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    /// Normalized session time.
    pub t: f64,
    /// Bid the agent plans to propose next, if already computed.
    pub own_next_bid: Option<Bid>,
    /// Opponent bids received so far, oldest first.
    pub opponent_history: Vec<Bid>,
    /// Dynamic threshold `ū_t` at this time.
    pub dynamic_threshold: f64,
}
