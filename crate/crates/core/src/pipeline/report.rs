use std::fmt::Write as _;
use std::fs;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{write_json, ModelMetrics, RunArtifact};

/// One row of `report.csv`: a model compared with the baseline. Accuracy and
/// AUPRC deltas are in percentage points; the relative AUPRC delta is in
/// percent of the baseline AUPRC.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub w1: f64,
    pub acc_pct_delta: f64,
    pub auprc_pct_delta: f64,
    pub auprc_rel_pct_delta: f64,
    pub suff_delta: f64,
    pub comp_delta: f64,
}

impl ReportRow {
    pub fn compare(baseline: &ModelMetrics, other: &ModelMetrics) -> Self {
        let b = &baseline.report;
        let o = &other.report;
        let auprc_delta = o.mean_auprc - b.mean_auprc;
        Self {
            w1: other.w1,
            acc_pct_delta: 100.0 * (o.accuracy - b.accuracy),
            auprc_pct_delta: 100.0 * auprc_delta,
            auprc_rel_pct_delta: if b.mean_auprc > 0.0 {
                100.0 * auprc_delta / b.mean_auprc
            } else {
                0.0
            },
            suff_delta: o.sufficiency_aopc - b.sufficiency_aopc,
            comp_delta: o.comprehensiveness_aopc - b.comprehensiveness_aopc,
        }
    }
}

pub const REPORT_HEADER: &str =
    "w1,acc_pct_delta,auprc_pct_delta,auprc_rel_pct_delta,suff_delta,comp_delta";

fn fmt(v: f64) -> String {
    let s = format!("{v:.6}");
    // avoid "-0.000000" for deltas that round to zero
    if s.trim_start_matches('-')
        .chars()
        .all(|c| c == '0' || c == '.')
    {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in rows {
        let fields = [
            r.w1,
            r.acc_pct_delta,
            r.auprc_pct_delta,
            r.auprc_rel_pct_delta,
            r.suff_delta,
            r.comp_delta,
        ];
        let line: Vec<String> = fields.iter().map(|&v| fmt(v)).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model_index: usize,
    pub frontier_index: Option<usize>,
    pub w1: f64,
    pub accuracy: f64,
    pub mean_auprc: f64,
    pub sufficiency_aopc: f64,
    pub comprehensiveness_aopc: f64,
}

impl From<&ModelMetrics> for ModelSummary {
    fn from(m: &ModelMetrics) -> Self {
        Self {
            model_index: m.model_index,
            frontier_index: m.frontier_index,
            w1: m.w1,
            accuracy: m.report.accuracy,
            mean_auprc: m.report.mean_auprc,
            sufficiency_aopc: m.report.sufficiency_aopc,
            comprehensiveness_aopc: m.report.comprehensiveness_aopc,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub baseline: ModelSummary,
    pub chosen: ModelSummary,
    pub delta: ReportRow,
    pub rows: usize,
}

/// Writes `report.csv` (one row per scored model, frontier order) and
/// `summary.json` comparing the chosen model with the baseline. Indices are
/// model indices as in `metrics.json`.
pub fn emit_report(
    run: &RunArtifact,
    baseline_index: usize,
    chosen_index: usize,
) -> Result<Summary> {
    let metrics = run.load_metrics()?;
    let find = |index: usize| {
        metrics
            .iter()
            .find(|m| m.model_index == index)
            .ok_or_else(|| Error::Schema(format!("model {index} has no metrics")))
    };
    let baseline = find(baseline_index)?;
    let chosen = find(chosen_index)?;
    let rows: Vec<ReportRow> = metrics
        .iter()
        .map(|m| ReportRow::compare(baseline, m))
        .collect();
    let path = run.report();
    fs::write(&path, report_csv(&rows)).map_err(|e| Error::io(&path, e))?;
    let summary = Summary {
        baseline: baseline.into(),
        chosen: chosen.into(),
        delta: ReportRow::compare(baseline, chosen),
        rows: rows.len(),
    };
    write_json(&run.summary(), &summary)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MetricReport;

    fn metric(w1: f64, accuracy: f64, auprc: f64) -> ModelMetrics {
        ModelMetrics {
            model_index: 0,
            frontier_index: Some(0),
            weights_file: "models/model_00.json".into(),
            w1,
            w2: 1.0 - w1,
            degenerate: false,
            report: MetricReport {
                accuracy,
                per_class_recall: vec![],
                mean_auprc: auprc,
                auprc_count: 1,
                auprc_skipped: 0,
                sufficiency_aopc: 0.1,
                comprehensiveness_aopc: 0.2,
            },
            confusion: vec![],
        }
    }

    #[test]
    fn self_comparison_is_zero() {
        let m = metric(1.0, 0.9, 0.8);
        let r = ReportRow::compare(&m, &m);
        assert_eq!(
            (
                r.acc_pct_delta,
                r.auprc_pct_delta,
                r.auprc_rel_pct_delta,
                r.suff_delta,
                r.comp_delta
            ),
            (0.0, 0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn auprc_deltas() {
        let r = ReportRow::compare(&metric(1.0, 0.9, 0.80), &metric(0.4, 0.9, 0.85));
        assert!((r.auprc_pct_delta - 5.0).abs() < 1e-9);
        assert!((r.auprc_rel_pct_delta - 6.25).abs() < 1e-9);
    }

    #[test]
    fn csv_layout() {
        let m = metric(1.0, 0.9, 0.8);
        let csv = report_csv(&[ReportRow::compare(&m, &m)]);
        assert_eq!(
            csv,
            format!("{REPORT_HEADER}\n1.000000,0.000000,0.000000,0.000000,0.000000,0.000000\n")
        );
        assert_eq!(fmt(-1e-9), "0.000000");
        assert_eq!(fmt(-0.5), "-0.500000");
    }
}
