use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::explain::{Explanation, MaskedPredictor};
use crate::seed::keyed_rng;

pub const DEFAULT_PERMUTATIONS: usize = 2000;

/// Monte-Carlo Shapley values with per-token standard errors, one row per class.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapleyEstimate {
    pub classes: Vec<usize>,
    pub values: Vec<Vec<f64>>,
    pub std_errors: Vec<Vec<f64>>,
    /// `v(all tokens) - v(no tokens)` per class.
    pub total_gain: Vec<f64>,
    pub permutations: usize,
}

/// Estimates Shapley values of the game `v(S) = model(S)[k]` by sampling
/// permutations in antithetic pairs (each permutation and its reverse). An odd
/// permutation count is rounded up to the next pair.
pub fn shapley_values<M: MaskedPredictor + ?Sized>(
    model: &M,
    sample_id: &str,
    p: usize,
    classes: &[usize],
    permutations: usize,
    seed: u64,
) -> Result<ShapleyEstimate> {
    if permutations == 0 {
        return Err(Error::Config("need at least one permutation".into()));
    }
    let pick = |probs: Vec<f64>| -> Result<Vec<f64>> {
        classes
            .iter()
            .map(|&k| {
                probs.get(k).copied().ok_or_else(|| {
                    Error::Shape(format!(
                        "class {k} out of range for {} probabilities",
                        probs.len()
                    ))
                })
            })
            .collect()
    };
    let empty = pick(model.predict_masked(&vec![false; p])?)?;
    let full = pick(model.predict_masked(&vec![true; p])?)?;
    let total_gain: Vec<f64> = full.iter().zip(&empty).map(|(f, e)| f - e).collect();

    let nc = classes.len();
    let pairs = permutations.div_ceil(2);
    let mut sum = vec![vec![0.0; p]; nc];
    let mut sum_sq = vec![vec![0.0; p]; nc];
    let mut rng = keyed_rng(seed, sample_id);
    let mut order: Vec<usize> = (0..p).collect();

    for _ in 0..pairs {
        order.shuffle(&mut rng);
        let forward = marginals(model, &order, &empty, &full, &pick)?;
        let reversed: Vec<usize> = order.iter().rev().copied().collect();
        let backward = marginals(model, &reversed, &empty, &full, &pick)?;
        for c in 0..nc {
            for t in 0..p {
                let x = 0.5 * (forward[c][t] + backward[c][t]);
                sum[c][t] += x;
                sum_sq[c][t] += x * x;
            }
        }
    }

    let n = pairs as f64;
    let mut values = vec![vec![0.0; p]; nc];
    let mut std_errors = vec![vec![0.0; p]; nc];
    for c in 0..nc {
        for t in 0..p {
            let mean = sum[c][t] / n;
            values[c][t] = mean;
            let var = if pairs > 1 {
                ((sum_sq[c][t] - n * mean * mean) / (n - 1.0)).max(0.0)
            } else {
                0.0
            };
            std_errors[c][t] = (var / n).sqrt();
        }
    }
    Ok(ShapleyEstimate {
        classes: classes.to_vec(),
        values,
        std_errors,
        total_gain,
        permutations: 2 * pairs,
    })
}

/// Marginal contributions along one permutation, indexed `[class][token]`.
fn marginals<M, P>(
    model: &M,
    order: &[usize],
    empty: &[f64],
    full: &[f64],
    pick: &P,
) -> Result<Vec<Vec<f64>>>
where
    M: MaskedPredictor + ?Sized,
    P: Fn(Vec<f64>) -> Result<Vec<f64>>,
{
    let p = order.len();
    let mut out = vec![vec![0.0; p]; empty.len()];
    let mut mask = vec![false; p];
    let mut previous = empty.to_vec();
    for (step, &t) in order.iter().enumerate() {
        mask[t] = true;
        let current = if step + 1 == p {
            full.to_vec()
        } else {
            pick(model.predict_masked(&mask)?)?
        };
        for c in 0..empty.len() {
            out[c][t] = current[c] - previous[c];
        }
        previous = current;
    }
    Ok(out)
}

pub fn shapley_explain<M: MaskedPredictor + ?Sized>(
    model: &M,
    sample_id: &str,
    p: usize,
    class: usize,
    permutations: usize,
    seed: u64,
) -> Result<Explanation> {
    let estimate = shapley_values(model, sample_id, p, &[class], permutations, seed)?;
    Ok(Explanation {
        sample_id: sample_id.to_owned(),
        class_index: class,
        scores: estimate.values.into_iter().next().expect("one class"),
    })
}
