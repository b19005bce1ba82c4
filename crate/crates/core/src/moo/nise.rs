//! Noninferior set estimation for two objectives.
//!
//! Starting from the two single-objective extremes, each open segment between
//! adjacent frontier points is probed with the weight normal to it. The probe
//! either finds a point far enough below the segment to insert, or shows the
//! segment is already tight and closes it. Segments with the largest estimated
//! gap are refined first; gaps are measured after scaling each objective by the
//! range spanned by the extremes.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TradeOff;
use crate::moo::{pareto_filter, ObjectivePoint};

pub const DEFAULT_BUDGET: usize = 30;
pub const DEFAULT_GAP_TOL: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frontier {
    /// Non-dominated inserted points, `f1` ascending.
    pub points: Vec<ObjectivePoint>,
    /// Every solve in order, including probes that closed a segment.
    pub evaluated: Vec<ObjectivePoint>,
    pub solver_budget_used: usize,
    /// Upper bound on the normalized distance between the returned polyline
    /// and the true frontier (exact for an exact solver).
    pub max_gap_bound: f64,
}

#[derive(Clone, Copy, Debug)]
struct Segment {
    left: usize,
    right: usize,
    gap: f64,
}

struct Scale {
    f1: f64,
    f2: f64,
}

impl Scale {
    fn uv(&self, p: &ObjectivePoint) -> (f64, f64) {
        (p.f1 / self.f1, p.f2 / self.f2)
    }

    /// Normalized distance by which `candidate` lies below the line `w . f = w . anchor`.
    fn improvement(&self, w: TradeOff, anchor: &ObjectivePoint, candidate: &ObjectivePoint) -> f64 {
        let norm = (w.w1 * self.f1).hypot(w.w2 * self.f2);
        (anchor.scalarized(w) - candidate.scalarized(w)) / norm
    }

    /// Distance from the intersection of the two supporting lines to the chord.
    fn estimated_gap(&self, left: &ObjectivePoint, right: &ObjectivePoint) -> f64 {
        let (ul, vl) = self.uv(left);
        let (ur, vr) = self.uv(right);
        let (a1, b1) = (left.w.w1 * self.f1, left.w.w2 * self.f2);
        let (a2, b2) = (right.w.w1 * self.f1, right.w.w2 * self.f2);
        let c1 = a1 * ul + b1 * vl;
        let c2 = a2 * ur + b2 * vr;
        let det = a1 * b2 - a2 * b1;
        if det.abs() <= 1e-15 * (a1.abs() + b1.abs()) * (a2.abs() + b2.abs()) {
            return 0.0;
        }
        let pu = (c1 * b2 - c2 * b1) / det;
        let pv = (a1 * c2 - a2 * c1) / det;
        let (du, dv) = (ur - ul, vr - vl);
        let len = du.hypot(dv);
        if len == 0.0 {
            return 0.0;
        }
        // positive when the corner lies on the origin side of the chord
        let cross = dv * (pu - ul) - du * (pv - vl);
        (cross / len).max(0.0)
    }
}

fn normal_weight(left: &ObjectivePoint, right: &ObjectivePoint) -> TradeOff {
    let drop2 = left.f2 - right.f2;
    let rise1 = right.f1 - left.f1;
    let w1 = drop2 / (drop2 + rise1);
    TradeOff { w1, w2: 1.0 - w1 }
}

fn is_ordered_pair(left: &ObjectivePoint, right: &ObjectivePoint) -> bool {
    left.f1 < right.f1 && left.f2 > right.f2
}

/// Traces the frontier with at most `budget` calls to `solve`, which must return
/// `(f1, f2)` at a minimizer of `w1 * f1 + w2 * f2`.
pub fn nise<F>(mut solve: F, budget: usize, gap_tol: f64) -> Result<Frontier>
where
    F: FnMut(TradeOff) -> Result<(f64, f64)>,
{
    if budget < 2 {
        return Err(Error::Config(format!(
            "NISE budget must be at least 2, got {budget}"
        )));
    }
    if !(gap_tol >= 0.0) {
        return Err(Error::Config(format!(
            "gap tolerance {gap_tol} must be >= 0"
        )));
    }

    let mut evaluated: Vec<ObjectivePoint> = Vec::new();
    let mut run = |w: TradeOff, evaluated: &mut Vec<ObjectivePoint>| -> Result<ObjectivePoint> {
        let (f1, f2) = solve(w).map_err(|e| Error::Solver {
            w1: w.w1,
            w2: w.w2,
            source: Box::new(e),
        })?;
        if !(f1.is_finite() && f2.is_finite()) {
            return Err(Error::Solver {
                w1: w.w1,
                w2: w.w2,
                source: Box::new(Error::Numeric(format!(
                    "objectives ({f1}, {f2}) are not finite"
                ))),
            });
        }
        let point = ObjectivePoint {
            f1,
            f2,
            w,
            solution_ref: evaluated.len(),
        };
        evaluated.push(point);
        Ok(point)
    };

    let a = run(TradeOff::CROSS_ENTROPY_ONLY, &mut evaluated)?;
    let b = run(TradeOff::RATIONALE_ONLY, &mut evaluated)?;
    let mut points = vec![a, b];

    let scale = Scale {
        f1: (b.f1 - a.f1).abs(),
        f2: (a.f2 - b.f2).abs(),
    };
    let degenerate_range =
        |range: f64, x: f64, y: f64| range <= 1e-12 * (1.0 + x.abs().max(y.abs()));
    let mut open = Vec::new();
    let mut closed_bound: f64 = 0.0;
    if !degenerate_range(scale.f1, a.f1, b.f1)
        && !degenerate_range(scale.f2, a.f2, b.f2)
        && is_ordered_pair(&a, &b)
    {
        open.push(Segment {
            left: 0,
            right: 1,
            gap: scale.estimated_gap(&a, &b),
        });
    }

    while evaluated.len() < budget && !open.is_empty() {
        let pick = (0..open.len())
            .max_by(|&i, &j| {
                open[i]
                    .gap
                    .total_cmp(&open[j].gap)
                    .then(points[open[j].left].f1.total_cmp(&points[open[i].left].f1))
            })
            .expect("open segment");
        let seg = open.swap_remove(pick);
        let (left, right) = (points[seg.left], points[seg.right]);
        let w = normal_weight(&left, &right);
        let probe = run(w, &mut evaluated)?;
        let gain = scale.improvement(w, &left, &probe);
        debug!(
            "nise: w1={:.6} probe=({:.6}, {:.6}) gain={gain:.3e} est={:.3e}",
            w.w1, probe.f1, probe.f2, seg.gap
        );
        if gain > gap_tol {
            let idx = points.len();
            points.push(probe);
            for (l, r) in [(seg.left, idx), (idx, seg.right)] {
                if is_ordered_pair(&points[l], &points[r]) {
                    open.push(Segment {
                        left: l,
                        right: r,
                        gap: scale.estimated_gap(&points[l], &points[r]),
                    });
                }
            }
        } else {
            closed_bound = closed_bound.max(gain.max(0.0));
        }
    }

    let open_bound = open.iter().fold(0.0f64, |m, s| m.max(s.gap));
    Ok(Frontier {
        points: pareto_filter(&points),
        solver_budget_used: evaluated.len(),
        evaluated,
        max_gap_bound: open_bound.max(closed_bound),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// f1 = (t-1)^2, f2 = (t+1)^2, weighted optimum t = w1 - w2.
    fn toy(w: TradeOff) -> Result<(f64, f64)> {
        let t = w.w1 - w.w2;
        Ok(((t - 1.0).powi(2), (t + 1.0).powi(2)))
    }

    #[test]
    fn toy_extremes_and_midpoint() {
        let frontier = nise(toy, 3, 0.0).unwrap();
        assert_eq!(frontier.evaluated[0].f1, 0.0);
        assert_eq!(frontier.evaluated[0].f2, 4.0);
        let mid = frontier.evaluated[2];
        assert!((mid.w.w1 - 0.5).abs() < 1e-15);
        assert!((mid.f1 - 1.0).abs() < 1e-12 && (mid.f2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn initial_gap_is_corner_distance() {
        let frontier = nise(toy, 2, 0.0).unwrap();
        assert!((frontier.max_gap_bound - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn budget_is_respected() {
        let frontier = nise(toy, 15, 0.0).unwrap();
        assert_eq!(frontier.solver_budget_used, 15);
        assert_eq!(frontier.points.len(), 15);
    }

    #[test]
    fn loose_tolerance_closes_segments_early() {
        let frontier = nise(toy, 30, 0.5).unwrap();
        assert!(frontier.solver_budget_used < 30);
        assert!(frontier.max_gap_bound <= 0.5);
    }

    #[test]
    fn collapsed_objective_gives_no_segments() {
        let frontier = nise(|w| Ok((1.0 + w.w2, 0.0)), 10, 0.0).unwrap();
        assert_eq!(frontier.solver_budget_used, 2);
        assert_eq!(frontier.points.len(), 1);
        assert_eq!(frontier.points[0].w, TradeOff::CROSS_ENTROPY_ONLY);
    }

    #[test]
    fn solver_error_carries_weight() {
        let err = nise(
            |w| {
                if w.w1 == 0.0 {
                    Err(Error::Numeric("boom".into()))
                } else {
                    Ok((0.0, 1.0))
                }
            },
            5,
            0.0,
        )
        .unwrap_err();
        match err {
            Error::Solver { w1, w2, .. } => assert_eq!((w1, w2), (0.0, 1.0)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn small_budget_rejected() {
        assert!(matches!(nise(toy, 1, 0.0), Err(Error::Config(_))));
    }
}
