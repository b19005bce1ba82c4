use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featurize::VariantBatch;
use crate::linalg::Matrix;
use crate::model::{predict, train, TradeOff, TrainingProblem};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularizationChoice {
    /// Selected inverse regularization strength; `l2_strength = 1 / c_reg`.
    pub c_reg: f64,
    /// `(c_reg, mean validation accuracy)` for each distinct grid value, ascending.
    pub scores: Vec<(f64, f64)>,
}

/// Assigns each sample a fold id, dealing shuffled per-class indices round-robin.
pub fn stratified_folds(labels: &[usize], folds: usize, seed: u64) -> Vec<usize> {
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &y) in labels.iter().enumerate() {
        by_class.entry(y).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    let mut next = 0;
    for indices in by_class.values_mut() {
        indices.shuffle(&mut rng);
        for &i in indices.iter() {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    assignment
}

/// Mean validation accuracy of cross-entropy-only training at `c_reg`.
pub fn cross_validation_accuracy(
    features: &Matrix,
    labels: &[usize],
    num_classes: usize,
    fold_of: &[usize],
    folds: usize,
    c_reg: f64,
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    let mut total = 0.0;
    let mut used = 0;
    for fold in 0..folds {
        let train_idx: Vec<usize> = (0..labels.len()).filter(|&i| fold_of[i] != fold).collect();
        let valid_idx: Vec<usize> = (0..labels.len()).filter(|&i| fold_of[i] == fold).collect();
        if train_idx.is_empty() || valid_idx.is_empty() {
            continue;
        }
        let problem = TrainingProblem::new(
            features.select_rows(&train_idx),
            train_idx.iter().map(|&i| labels[i]).collect(),
            num_classes,
            VariantBatch::empty(features.cols(), 1),
            1.0 / c_reg,
            TradeOff::CROSS_ENTROPY_ONLY,
        )?;
        let weights = train(&problem, tol, max_iter)?.weights;
        let mut correct = 0;
        for &i in &valid_idx {
            if predict(&weights, features.row(i))?.argmax() == labels[i] {
                correct += 1;
            }
        }
        total += correct as f64 / valid_idx.len() as f64;
        used += 1;
    }
    if used == 0 {
        return Err(Error::Config(
            "cross-validation produced no usable folds".into(),
        ));
    }
    Ok(total / used as f64)
}

/// Picks the grid value with the best mean fold accuracy at `w = (1, 0)`.
/// Ties go to the smaller `c_reg` (stronger regularization).
#[allow(clippy::too_many_arguments)]
pub fn select_regularization(
    features: &Matrix,
    labels: &[usize],
    num_classes: usize,
    grid: &[f64],
    folds: usize,
    seed: u64,
    tol: f64,
    max_iter: usize,
) -> Result<RegularizationChoice> {
    if grid.is_empty() {
        return Err(Error::Config("regularization grid is empty".into()));
    }
    if folds < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {folds}")));
    }
    if let Some(bad) = grid.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
        return Err(Error::Config(format!(
            "grid value {bad} must be positive and finite"
        )));
    }
    let mut values = grid.to_vec();
    values.sort_by(f64::total_cmp);
    values.dedup();

    let fold_of = stratified_folds(labels, folds, seed);
    let mut scores = Vec::with_capacity(values.len());
    let mut best: Option<(f64, f64)> = None;
    for &c in &values {
        let acc = cross_validation_accuracy(
            features,
            labels,
            num_classes,
            &fold_of,
            folds,
            c,
            tol,
            max_iter,
        )?;
        scores.push((c, acc));
        if best.is_none_or(|(_, best_acc)| acc > best_acc) {
            best = Some((c, acc));
        }
    }
    Ok(RegularizationChoice {
        c_reg: best.expect("non-empty grid").0,
        scores,
    })
}
