//! Bi-objective weighted-sum machinery over (cross-entropy, contrastive rationale loss).

mod nise;

use serde::{Deserialize, Serialize};

use crate::model::TradeOff;

pub use nise::{nise, Frontier, DEFAULT_BUDGET, DEFAULT_GAP_TOL};

/// Objective values of one weighted solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectivePoint {
    pub f1: f64,
    pub f2: f64,
    pub w: TradeOff,
    /// Index of the solve that produced this point (0-based, in solve order).
    pub solution_ref: usize,
}

impl ObjectivePoint {
    /// The `w1 = 0` extreme: stored, but excluded from reports by default.
    pub fn is_degenerate(&self) -> bool {
        self.w.w1 == 0.0
    }

    pub fn scalarized(&self, w: TradeOff) -> f64 {
        w.w1 * self.f1 + w.w2 * self.f2
    }
}

/// `a` is no worse than `b` in both objectives and strictly better in one.
pub fn dominates(a: &ObjectivePoint, b: &ObjectivePoint) -> bool {
    a.f1 <= b.f1 && a.f2 <= b.f2 && (a.f1 < b.f1 || a.f2 < b.f2)
}

/// Keeps exactly the non-dominated points, sorted by `f1` ascending (then `f2`).
/// Identical points do not dominate each other and are all kept.
pub fn pareto_filter(points: &[ObjectivePoint]) -> Vec<ObjectivePoint> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.f1.total_cmp(&b.f1).then(a.f2.total_cmp(&b.f2)));

    let mut kept = Vec::new();
    // smallest f2 among points with strictly smaller f1
    let mut best_before = f64::INFINITY;
    let mut i = 0;
    while i < sorted.len() {
        let f1 = sorted[i].f1;
        let group_end = sorted[i..]
            .iter()
            .position(|p| p.f1 != f1)
            .map_or(sorted.len(), |o| i + o);
        let group_min = sorted[i].f2;
        for p in &sorted[i..group_end] {
            if p.f2 == group_min && p.f2 < best_before {
                kept.push(*p);
            }
        }
        best_before = best_before.min(group_min);
        i = group_end;
    }
    kept
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Index of the interior-weight point that is dominated.
    pub dominated: usize,
    /// Index of a point dominating it.
    pub dominator: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    /// Number of points solved with strictly positive weights.
    pub checked: usize,
    pub violations: Vec<Violation>,
}

impl CertificationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that every point solved with weights in the open simplex is
/// non-dominated within `points`, as weighted-sum optimality requires.
pub fn certify_frontier(points: &[ObjectivePoint]) -> CertificationReport {
    let mut report = CertificationReport::default();
    for (i, p) in points.iter().enumerate() {
        if !p.w.is_interior() {
            continue;
        }
        report.checked += 1;
        if let Some(j) = points.iter().position(|q| dominates(q, p)) {
            report.violations.push(Violation {
                dominated: i,
                dominator: j,
            });
        }
    }
    report
}
