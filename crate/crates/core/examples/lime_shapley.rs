//! Both explainers on an opaque scoring function: token saliency from a
//! perturbation surrogate and from permutation-sampled Shapley values.

use rationale_frontier::explain::{lime_explain, shapley_values, PerturbationConfig};
use rationale_frontier::metrics::rank_tokens;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tokens = ["the", "acting", "was", "not", "bad", "at", "all"];
    // "bad" pushes towards negative unless "not" is present
    let model = |mask: &[bool]| {
        let on = |w: &str| mask[tokens.iter().position(|t| *t == w).unwrap()];
        let mut z: f64 = 0.2;
        if on("bad") {
            z += if on("not") { 1.5 } else { -2.0 };
        }
        if on("acting") {
            z += 0.3;
        }
        let p = 1.0 / (1.0 + (-z).exp());
        vec![1.0 - p, p]
    };

    let lime = lime_explain(
        &model,
        "review-1",
        tokens.len(),
        1,
        &PerturbationConfig::default(),
    )?;
    let shap = shapley_values(&model, "review-1", tokens.len(), &[1], 2000, 0)?;
    println!("{:<8} {:>8} {:>8} {:>8}", "token", "lime", "shapley", "+/-");
    for (t, token) in tokens.iter().enumerate() {
        println!(
            "{token:<8} {:>8.4} {:>8.4} {:>8.4}",
            lime.scores[t], shap.values[0][t], shap.std_errors[0][t]
        );
    }
    let sum: f64 = shap.values[0].iter().sum();
    println!(
        "Shapley sum {sum:.4} vs total gain {:.4}",
        shap.total_gain[0]
    );
    let top = |s: &[f64]| {
        rank_tokens(s)
            .iter()
            .take(2)
            .map(|&t| tokens[t])
            .collect::<Vec<_>>()
    };
    println!(
        "top tokens: lime {:?}, shapley {:?}",
        top(&lime.scores),
        top(&shap.values[0])
    );
    Ok(())
}
