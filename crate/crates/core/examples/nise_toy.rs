//! Frontier tracing on f1 = (t-1)^2, f2 = (t+1)^2, whose weighted optimum is
//! t = w1 - w2 and whose frontier is sqrt(f1) + sqrt(f2) = 2.

use rationale_frontier::model::TradeOff;
use rationale_frontier::moo::{certify_frontier, nise};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let solve = |w: TradeOff| {
        let t = w.w1 - w.w2;
        Ok(((t - 1.0).powi(2), (t + 1.0).powi(2)))
    };
    for budget in [3, 5, 9, 17] {
        let frontier = nise(solve, budget, 0.0)?;
        println!(
            "budget {budget:>2}: {:>2} points, gap bound {:.4}",
            frontier.points.len(),
            frontier.max_gap_bound
        );
    }

    let frontier = nise(solve, 9, 0.0)?;
    println!("{:>8} {:>8} {:>8} {:>10}", "w1", "f1", "f2", "residual");
    for p in &frontier.points {
        let residual = p.f1.sqrt() + p.f2.sqrt() - 2.0;
        println!(
            "{:>8.4} {:>8.4} {:>8.4} {residual:>10.1e}",
            p.w.w1, p.f1, p.f2
        );
    }
    let report = certify_frontier(&frontier.evaluated);
    println!(
        "certified {} interior points, {} violations",
        report.checked,
        report.violations.len()
    );
    Ok(())
}
