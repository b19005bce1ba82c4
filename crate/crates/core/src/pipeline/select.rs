use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{ModelMetrics, SelectionPolicy};

/// Outcome of model selection, as model indices (solve order).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub baseline: usize,
    pub chosen: usize,
    pub manual: bool,
    /// Whether some model met the accuracy constraint.
    pub feasible: bool,
    pub warning: Option<String>,
}

/// Picks the model with the highest mean AUPRC among those whose accuracy is
/// at least the baseline's minus `max_acc_drop`. The baseline is the
/// cross-entropy-only model. Ties favour higher accuracy, then larger `w1`.
pub fn select_model(metrics: &[ModelMetrics], policy: &SelectionPolicy) -> Result<Selection> {
    let base = metrics
        .iter()
        .find(|m| m.w1 == 1.0 && !m.degenerate)
        .ok_or_else(|| Error::Schema("no cross-entropy-only model was scored".into()))?;
    let baseline = base.model_index;

    if let Some(manual) = policy.manual {
        if !metrics.iter().any(|m| m.model_index == manual) {
            return Err(Error::Config(format!(
                "manual selection {manual} is not a scored model"
            )));
        }
        return Ok(Selection {
            baseline,
            chosen: manual,
            manual: true,
            feasible: true,
            warning: None,
        });
    }

    let floor = base.report.accuracy - policy.max_acc_drop;
    let best = metrics
        .iter()
        .filter(|m| policy.include_degenerate || !m.degenerate)
        // tolerate rounding in the difference of two accuracies
        .filter(|m| m.report.accuracy >= floor - 1e-12)
        .max_by(|a, b| {
            a.report
                .mean_auprc
                .total_cmp(&b.report.mean_auprc)
                .then(a.report.accuracy.total_cmp(&b.report.accuracy))
                .then(a.w1.total_cmp(&b.w1))
        });
    Ok(match best {
        Some(m) => Selection {
            baseline,
            chosen: m.model_index,
            manual: false,
            feasible: true,
            warning: None,
        },
        None => Selection {
            baseline,
            chosen: baseline,
            manual: false,
            feasible: false,
            warning: Some(format!(
                "no model keeps accuracy within {} of the baseline; keeping the baseline",
                policy.max_acc_drop
            )),
        },
    })
}
