use crate::domain::{Bid, BidScore, NegotiationDomain};
use serde::Serialize;

/// Frequency model of the opponent's preferences.
///
/// Issues whose values the opponent keeps repeating get more weight; a value
/// scores by how often it was offered relative to the issue's most offered
/// value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpponentModel {
    counts: Vec<Vec<u32>>,
    observed: u32,
}

impl OpponentModel {
    pub fn new(domain: &NegotiationDomain) -> Self {
        OpponentModel {
            counts: domain.value_counts().into_iter().map(|n| vec![0; n]).collect(),
            observed: 0,
        }
    }

    pub fn from_history<'a>(
        domain: &NegotiationDomain,
        history: impl IntoIterator<Item = &'a Bid>,
    ) -> Self {
        let mut model = OpponentModel::new(domain);
        for bid in history {
            model.observe(bid);
        }
        model
    }

    /// Count one opponent bid. Values outside the domain are ignored.
    pub fn observe(&mut self, bid: &Bid) {
        for (counts, &v) in self.counts.iter_mut().zip(bid.values()) {
            if let Some(c) = counts.get_mut(v) {
                *c += 1;
            }
        }
        self.observed += 1;
    }

    pub fn observed(&self) -> u32 {
        self.observed
    }

    pub fn counts(&self) -> &[Vec<u32>] {
        &self.counts
    }

    /// Issue weights from normalized concentration of the value frequencies;
    /// uniform while nothing distinguishes the issues.
    pub fn issue_weights(&self) -> Vec<f64> {
        let n = self.counts.len() as f64;
        if self.observed == 0 {
            return vec![1.0 / n; self.counts.len()];
        }
        let raw: Vec<f64> = self
            .counts
            .iter()
            .map(|counts| {
                let total: u32 = counts.iter().sum();
                let k = counts.len() as f64;
                if total == 0 {
                    return 0.0;
                }
                let h: f64 = counts
                    .iter()
                    .map(|&c| {
                        let f = c as f64 / total as f64;
                        f * f
                    })
                    .sum();
                ((h - 1.0 / k) / (1.0 - 1.0 / k)).max(0.0)
            })
            .collect();
        let sum: f64 = raw.iter().sum();
        if sum <= 0.0 {
            vec![1.0 / n; self.counts.len()]
        } else {
            raw.iter().map(|r| r / sum).collect()
        }
    }

    /// `Û_o(ω) = Σ ŵ_i · count(v_i) / maxCount_i`.
    pub fn estimated_utility(&self, bid: &Bid) -> f64 {
        let weights = self.issue_weights();
        let mut total = 0.0;
        for ((w, counts), &v) in weights.iter().zip(&self.counts).zip(bid.values()) {
            let max = counts.iter().copied().max().unwrap_or(0);
            if max > 0 {
                total += w * counts.get(v).copied().unwrap_or(0) as f64 / max as f64;
            }
        }
        total.clamp(0.0, 1.0)
    }
}

impl BidScore for OpponentModel {
    fn score(&self, bid: &Bid) -> f64 {
        self.estimated_utility(bid)
    }
}
