//! Plausibility (average precision against a human rationale), AOPC
//! faithfulness and per-class recall.

use rationale_frontier::metrics::{auprc, faithfulness, report_from_predictions, FaithfulnessBins};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rationale = [false, true, false, true, false, false];
    for (name, scores) in [
        ("aligned", [0.1, 0.9, 0.0, 0.8, 0.2, 0.1]),
        ("partly", [0.1, 0.9, 0.7, 0.2, 0.3, 0.0]),
        ("reversed", [0.9, 0.0, 0.8, 0.1, 0.7, 0.6]),
    ] {
        println!("{name:<9} AUPRC {:.4}", auprc(&scores, &rationale)?);
    }

    // class-1 probability grows with each rationale token kept
    let model = |mask: &[bool]| {
        let hits = mask
            .iter()
            .zip(&rationale)
            .filter(|(m, r)| **m && **r)
            .count() as f64;
        let p = 0.3 + 0.3 * hits;
        vec![1.0 - p, p]
    };
    let bins = FaithfulnessBins::default();
    for (name, scores) in [
        ("aligned", [0.1, 0.9, 0.0, 0.8, 0.2, 0.1]),
        ("reversed", [0.9, 0.0, 0.8, 0.1, 0.7, 0.6]),
    ] {
        let f = faithfulness(&model, &scores, 1, &bins)?;
        println!(
            "{name:<9} sufficiency {:+.4} comprehensiveness {:+.4}",
            f.sufficiency, f.comprehensiveness
        );
    }

    let report = report_from_predictions(&[0, 1, 1, 2, 0, 2], &[0, 1, 2, 2, 1, 2], 3)?;
    println!(
        "accuracy {:.3}, recall {:?}",
        report.accuracy, report.per_class_recall
    );
    println!("confusion {:?}", report.confusion);
    Ok(())
}
