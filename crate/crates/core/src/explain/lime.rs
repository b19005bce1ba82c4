use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::{Explanation, MaskedPredictor};
use crate::seed::keyed_rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbationConfig {
    pub num_samples: usize,
    pub kernel_width: f64,
    pub ridge_strength: f64,
    pub seed: u64,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self {
            num_samples: 1000,
            kernel_width: 0.25,
            ridge_strength: 1.0,
            seed: 0,
        }
    }
}

impl PerturbationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_samples < 2 {
            return Err(Error::Config(format!(
                "num_samples {} must be >= 2",
                self.num_samples
            )));
        }
        if !(self.kernel_width > 0.0) {
            return Err(Error::Config(format!(
                "kernel width {} must be > 0",
                self.kernel_width
            )));
        }
        if !(self.ridge_strength >= 0.0) {
            return Err(Error::Config(format!(
                "ridge strength {} must be >= 0",
                self.ridge_strength
            )));
        }
        Ok(())
    }
}

/// Draws perturbation masks: a removal count uniform in `1..=p`, then that many
/// positions uniformly without replacement. The stream is keyed by `sample_id`.
pub fn draw_perturbations(sample_id: &str, p: usize, cfg: &PerturbationConfig) -> Vec<Vec<bool>> {
    let mut rng = keyed_rng(cfg.seed, sample_id);
    (0..cfg.num_samples)
        .map(|_| {
            let removed = rng.random_range(1..=p);
            let mut mask = vec![true; p];
            for t in index::sample(&mut rng, p, removed) {
                mask[t] = false;
            }
            mask
        })
        .collect()
}

/// Weighted ridge regression of each target on the binary masks, with an
/// unpenalized intercept. Sample weights are rescaled to mean one first.
/// Returns one coefficient vector (length `p`) per target.
pub fn fit_surrogate(
    masks: &[Vec<bool>],
    targets: &[Vec<f64>],
    weights: &[f64],
    ridge: f64,
) -> Result<Vec<Vec<f64>>> {
    let n = masks.len();
    let p = masks.first().map_or(0, Vec::len);
    if weights.len() != n || targets.iter().any(|t| t.len() != n) {
        return Err(Error::Shape(
            "surrogate inputs disagree on sample count".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Numeric(
            "surrogate weights must have a positive finite sum".into(),
        ));
    }
    let pi: Vec<f64> = weights.iter().map(|w| w * n as f64 / total).collect();

    let mut z_mean = vec![0.0; p];
    for (mask, &w) in masks.iter().zip(&pi) {
        for (m, &bit) in z_mean.iter_mut().zip(mask) {
            if bit {
                *m += w;
            }
        }
    }
    z_mean.iter_mut().for_each(|m| *m /= n as f64);

    let a = DMatrix::from_fn(n, p, |i, j| {
        pi[i].sqrt() * (masks[i][j] as u8 as f64 - z_mean[j])
    });
    let rhs = DMatrix::from_fn(n, targets.len(), |i, c| {
        let mean = targets[c].iter().zip(&pi).map(|(y, w)| y * w).sum::<f64>() / n as f64;
        pi[i].sqrt() * (targets[c][i] - mean)
    });

    let coefs = if p <= n {
        let gram = a.transpose() * &a + DMatrix::identity(p, p) * ridge;
        solve_spd(gram, a.transpose() * rhs)?
    } else {
        let kernel = &a * a.transpose() + DMatrix::identity(n, n) * ridge;
        a.transpose() * solve_spd(kernel, rhs)?
    };
    Ok((0..targets.len())
        .map(|c| coefs.column(c).iter().copied().collect())
        .collect())
}

fn solve_spd(matrix: DMatrix<f64>, rhs: DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(chol) = matrix.clone().cholesky() {
        return Ok(chol.solve(&rhs));
    }
    matrix
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::Numeric(format!("surrogate solve failed: {e}")))
}

/// Explains several classes from one shared perturbation set.
pub fn lime_explain_classes<M: MaskedPredictor + ?Sized>(
    model: &M,
    sample_id: &str,
    p: usize,
    classes: &[usize],
    cfg: &PerturbationConfig,
) -> Result<Vec<Explanation>> {
    cfg.validate()?;
    if p == 0 {
        return Ok(classes
            .iter()
            .map(|&k| Explanation {
                sample_id: sample_id.to_owned(),
                class_index: k,
                scores: Vec::new(),
            })
            .collect());
    }
    let masks = draw_perturbations(sample_id, p, cfg);
    let mut targets = vec![Vec::with_capacity(masks.len()); classes.len()];
    let mut weights = Vec::with_capacity(masks.len());
    for mask in &masks {
        let probs = model.predict_masked(mask)?;
        for (target, &k) in targets.iter_mut().zip(classes) {
            let v = *probs.get(k).ok_or_else(|| {
                Error::Shape(format!(
                    "class {k} out of range for {} probabilities",
                    probs.len()
                ))
            })?;
            target.push(v);
        }
        let removed = mask.iter().filter(|&&b| !b).count() as f64 / p as f64;
        weights.push((-(removed / cfg.kernel_width).powi(2)).exp());
    }
    let coefs = fit_surrogate(&masks, &targets, &weights, cfg.ridge_strength)?;
    Ok(classes
        .iter()
        .zip(coefs)
        .map(|(&k, scores)| Explanation {
            sample_id: sample_id.to_owned(),
            class_index: k,
            scores,
        })
        .collect())
}

pub fn lime_explain<M: MaskedPredictor + ?Sized>(
    model: &M,
    sample_id: &str,
    p: usize,
    class: usize,
    cfg: &PerturbationConfig,
) -> Result<Explanation> {
    Ok(lime_explain_classes(model, sample_id, p, &[class], cfg)?.remove(0))
}
