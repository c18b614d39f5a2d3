use super::{check_enumerable, EngineError};
use crate::domain::{Bid, BidScore, NegotiationDomain};
use std::cmp::Ordering;

/// Closeness values closer than this count as a tie.
const TIE: f64 = 1e-12;

/// Every bid not dominated in (own, opponent) utility, in bid order.
pub fn pareto_front(
    domain: &NegotiationDomain,
    own: &dyn BidScore,
    opp: &dyn BidScore,
) -> Result<Vec<Bid>, EngineError> {
    check_enumerable(domain)?;
    let mut points: Vec<(f64, f64, Bid)> = domain
        .bids()
        .map(|b| (own.score(&b), opp.score(&b), b))
        .collect();
    points.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));

    // Sweep by falling own utility. A point survives when it has the best
    // opponent utility among equal own utilities and beats every point with
    // strictly higher own utility.
    let mut front = Vec::new();
    let mut best_above = f64::NEG_INFINITY;
    let mut i = 0;
    while i < points.len() {
        let own_u = points[i].0;
        let group_max = points[i].1;
        let mut j = i;
        while j < points.len() && points[j].0 == own_u {
            if points[j].1 == group_max && group_max > best_above {
                front.push(points[j].2.clone());
            }
            j += 1;
        }
        best_above = best_above.max(group_max);
        i = j;
    }
    front.sort();
    Ok(front)
}

/// TOPSIS closeness of each point for criterion weights `(w, 1 − w)`.
pub fn topsis_closeness(points: &[(f64, f64)], w: f64) -> Vec<f64> {
    let w = if w.is_nan() { 0.5 } else { w.clamp(0.0, 1.0) };
    let norm = |col: fn(&(f64, f64)) -> f64| points.iter().map(|p| col(p).powi(2)).sum::<f64>().sqrt();
    let n_own = norm(|p| p.0);
    let n_opp = norm(|p| p.1);
    let scale = |x: f64, n: f64, weight: f64| if n > 0.0 { weight * x / n } else { 0.0 };
    let v: Vec<(f64, f64)> = points
        .iter()
        .map(|&(a, b)| (scale(a, n_own, w), scale(b, n_opp, 1.0 - w)))
        .collect();
    let fold = |f: fn(f64, f64) -> f64, init: f64, col: fn(&(f64, f64)) -> f64| {
        v.iter().map(col).fold(init, f)
    };
    let ideal = (fold(f64::max, f64::NEG_INFINITY, |p| p.0), fold(f64::max, f64::NEG_INFINITY, |p| p.1));
    let anti = (fold(f64::min, f64::INFINITY, |p| p.0), fold(f64::min, f64::INFINITY, |p| p.1));
    v.iter()
        .map(|&(a, b)| {
            let d_plus = ((a - ideal.0).powi(2) + (b - ideal.1).powi(2)).sqrt();
            let d_minus = ((a - anti.0).powi(2) + (b - anti.1).powi(2)).sqrt();
            if d_plus + d_minus == 0.0 {
                0.5
            } else {
                d_minus / (d_plus + d_minus)
            }
        })
        .collect()
}

/// Front member with the highest TOPSIS closeness; ties go to higher own
/// utility, then the smaller bid.
pub fn topsis_select(front: &[Bid], w: f64, own: &dyn BidScore, opp: &dyn BidScore) -> Option<Bid> {
    let points: Vec<(f64, f64)> = front.iter().map(|b| (own.score(b), opp.score(b))).collect();
    let closeness = topsis_closeness(&points, w);
    let mut best: Option<usize> = None;
    for i in 0..front.len() {
        let better = match best {
            None => true,
            Some(b) => {
                let dc = closeness[i] - closeness[b];
                if dc.abs() > TIE {
                    dc > 0.0
                } else {
                    match points[i].0.total_cmp(&points[b].0) {
                        Ordering::Greater => true,
                        Ordering::Less => false,
                        Ordering::Equal => front[i] < front[b],
                    }
                }
            }
        };
        if better {
            best = Some(i);
        }
    }
    best.map(|i| front[i].clone())
}
