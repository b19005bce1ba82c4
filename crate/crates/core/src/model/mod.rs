//! Multinomial logistic regression trained on a weighted sum of cross-entropy
//! and the contrastive rationale loss.

mod cv;
mod loss;
mod optim;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featurize::VariantBatch;
use crate::linalg::{dot, softmax_in_place, Matrix};

pub use cv::{
    cross_validation_accuracy, select_regularization, stratified_folds, RegularizationChoice,
};
pub use loss::{
    contrastive_rationale_loss, cross_entropy, l2_penalty, scalarized_objective, LossAndGrad,
};
pub use optim::{train, TrainOutcome, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Per-class weight vectors and intercepts. Logits are `theta_k . x + bias_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierWeights {
    theta: Matrix,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct WeightsFile {
    num_classes: usize,
    dim: usize,
    bias: Vec<f64>,
    theta: Vec<Vec<f64>>,
}

impl ClassifierWeights {
    pub fn zeros(num_classes: usize, dim: usize) -> Self {
        Self {
            theta: Matrix::zeros(num_classes, dim),
            bias: vec![0.0; num_classes],
        }
    }

    pub fn new(theta: Matrix, bias: Vec<f64>) -> Result<Self> {
        if theta.rows() != bias.len() {
            return Err(Error::Shape(format!(
                "{} weight rows but {} intercepts",
                theta.rows(),
                bias.len()
            )));
        }
        if !theta.all_finite() || bias.iter().any(|b| !b.is_finite()) {
            return Err(Error::Numeric("weights must be finite".into()));
        }
        Ok(Self { theta, bias })
    }

    pub fn num_classes(&self) -> usize {
        self.bias.len()
    }

    pub fn dim(&self) -> usize {
        self.theta.cols()
    }

    pub fn theta(&self) -> &Matrix {
        &self.theta
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn class_weights(&self, k: usize) -> &[f64] {
        self.theta.row(k)
    }

    /// Number of free parameters (`|C| * d + |C|`).
    pub fn param_len(&self) -> usize {
        self.theta.as_slice().len() + self.bias.len()
    }

    /// Flattens to `[theta row-major..., bias...]`.
    pub fn to_params(&self) -> Vec<f64> {
        let mut p = self.theta.as_slice().to_vec();
        p.extend_from_slice(&self.bias);
        p
    }

    pub fn from_params(num_classes: usize, dim: usize, params: &[f64]) -> Result<Self> {
        let n = num_classes * dim;
        if params.len() != n + num_classes {
            return Err(Error::Shape(format!(
                "{} parameters for {num_classes} classes of dimension {dim}",
                params.len()
            )));
        }
        Ok(Self {
            theta: Matrix::from_vec(num_classes, dim, params[..n].to_vec())?,
            bias: params[n..].to_vec(),
        })
    }

    pub(crate) fn theta_mut(&mut self) -> &mut Matrix {
        &mut self.theta
    }

    pub(crate) fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    /// Writes `logits` for `x` without validation.
    pub(crate) fn logits_into(&self, x: &[f64], logits: &mut [f64]) {
        for (k, out) in logits.iter_mut().enumerate() {
            *out = dot(self.theta.row(k), x) + self.bias[k];
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = WeightsFile {
            num_classes: self.num_classes(),
            dim: self.dim(),
            bias: self.bias.clone(),
            theta: self.theta.iter_rows().map(<[f64]>::to_vec).collect(),
        };
        fs::write(path, serde_json::to_string(&file)? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: WeightsFile = serde_json::from_str(&text)?;
        if file.theta.len() != file.num_classes {
            return Err(Error::Shape(format!(
                "weights file declares {} classes but has {} rows",
                file.num_classes,
                file.theta.len()
            )));
        }
        Self::new(Matrix::from_rows(&file.theta, file.dim)?, file.bias)
    }
}

/// Class probabilities for one input.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionVector {
    pub probs: Vec<f64>,
}

impl PredictionVector {
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = k;
            }
        }
        best
    }
}

pub fn predict(weights: &ClassifierWeights, x: &[f64]) -> Result<PredictionVector> {
    if x.len() != weights.dim() {
        return Err(Error::Shape(format!(
            "input of dimension {} for a model of dimension {}",
            x.len(),
            weights.dim()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite input".into()));
    }
    let mut probs = vec![0.0; weights.num_classes()];
    weights.logits_into(x, &mut probs);
    softmax_in_place(&mut probs);
    Ok(PredictionVector { probs })
}

/// Trade-off weights `(w1, w2)` on the simplex; `w1` weights cross-entropy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeOff {
    pub w1: f64,
    pub w2: f64,
}

impl TradeOff {
    pub const CROSS_ENTROPY_ONLY: TradeOff = TradeOff { w1: 1.0, w2: 0.0 };
    pub const RATIONALE_ONLY: TradeOff = TradeOff { w1: 0.0, w2: 1.0 };

    pub fn new(w1: f64, w2: f64) -> Result<Self> {
        if !(w1 >= 0.0 && w2 >= 0.0 && ((w1 + w2) - 1.0).abs() <= 1e-9) {
            return Err(Error::Config(format!(
                "weights ({w1}, {w2}) are not on the simplex"
            )));
        }
        Ok(Self { w1, w2 })
    }

    pub fn from_w1(w1: f64) -> Result<Self> {
        Self::new(w1, 1.0 - w1)
    }

    pub fn is_interior(&self) -> bool {
        self.w1 > 0.0 && self.w2 > 0.0
    }
}

/// Everything one weighted solve needs.
#[derive(Clone, Debug)]
pub struct TrainingProblem {
    pub features: Matrix,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub variants: VariantBatch,
    pub l2_strength: f64,
    pub trade_off: TradeOff,
}

impl TrainingProblem {
    pub fn new(
        features: Matrix,
        labels: Vec<usize>,
        num_classes: usize,
        variants: VariantBatch,
        l2_strength: f64,
        trade_off: TradeOff,
    ) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if labels.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if variants.dim() != features.cols() && !variants.is_empty() {
            return Err(Error::Shape(format!(
                "variant rows have dimension {}, features {}",
                variants.dim(),
                features.cols()
            )));
        }
        if let Some(&bad) = labels
            .iter()
            .chain(variants.labels())
            .find(|&&y| y >= num_classes)
        {
            return Err(Error::Label(format!(
                "class index {bad} with {num_classes} classes"
            )));
        }
        if !(l2_strength >= 0.0 && l2_strength.is_finite()) {
            return Err(Error::Config(format!(
                "l2 strength {l2_strength} must be finite and >= 0"
            )));
        }
        Ok(Self {
            features,
            labels,
            num_classes,
            variants,
            l2_strength,
            trade_off,
        })
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn with_trade_off(&self, trade_off: TradeOff) -> Self {
        Self {
            trade_off,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_give_uniform() {
        let w = ClassifierWeights::zeros(2, 3);
        assert_eq!(predict(&w, &[1.0, 2.0, 3.0]).unwrap().probs, vec![0.5, 0.5]);
    }

    #[test]
    fn logits_two_zero() {
        let w = ClassifierWeights::new(Matrix::zeros(2, 1), vec![2.0, 0.0]).unwrap();
        let p = predict(&w, &[0.0]).unwrap().probs;
        assert!((p[0] - 0.880797077977882).abs() < 1e-12);
        assert!((p[1] - 0.11920292202211755).abs() < 1e-12);
    }

    #[test]
    fn shift_invariance() {
        let a = ClassifierWeights::new(Matrix::zeros(3, 1), vec![0.3, -1.0, 2.0]).unwrap();
        let b = ClassifierWeights::new(Matrix::zeros(3, 1), vec![100.3, 99.0, 102.0]).unwrap();
        let pa = predict(&a, &[0.0]).unwrap().probs;
        let pb = predict(&b, &[0.0]).unwrap().probs;
        for (x, y) in pa.iter().zip(&pb) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((pa.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn non_finite_input_rejected() {
        let w = ClassifierWeights::zeros(2, 2);
        assert!(matches!(
            predict(&w, &[f64::NAN, 0.0]),
            Err(Error::Numeric(_))
        ));
        assert!(matches!(predict(&w, &[0.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn weights_file_round_trip() {
        let theta = Matrix::from_vec(2, 2, vec![0.1, 1.0 / 3.0, -2.5e-17, 7.0]).unwrap();
        let w = ClassifierWeights::new(theta, vec![std::f64::consts::PI, -1e300]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.json");
        w.save(&path).unwrap();
        assert_eq!(ClassifierWeights::load(&path).unwrap(), w);
    }

    #[test]
    fn trade_off_validation() {
        assert!(TradeOff::new(0.3, 0.7).is_ok());
        assert!(TradeOff::new(0.3, 0.6).is_err());
        assert!(TradeOff::new(-0.1, 1.1).is_err());
    }
}
