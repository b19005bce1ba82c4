use crate::featurize::VariantBatch;
use crate::linalg::{axpy, dot, log_sum_exp, Matrix};
use crate::model::{ClassifierWeights, TrainingProblem};

/// A loss value with its exact gradient, shaped like the weights.
#[derive(Clone, Debug)]
pub struct LossAndGrad {
    pub value: f64,
    pub grad: ClassifierWeights,
}

impl LossAndGrad {
    fn zero(num_classes: usize, dim: usize) -> Self {
        Self {
            value: 0.0,
            grad: ClassifierWeights::zeros(num_classes, dim),
        }
    }

    fn add_scaled(&mut self, scale: f64, other: &LossAndGrad) {
        self.value += scale * other.value;
        axpy(
            scale,
            other.grad.theta().as_slice(),
            self.grad.theta_mut().as_mut_slice(),
        );
        axpy(scale, other.grad.bias(), self.grad.bias_mut());
    }
}

/// Mean negative log-likelihood of the labels under the softmax model.
pub fn cross_entropy(
    weights: &ClassifierWeights,
    features: &Matrix,
    labels: &[usize],
) -> LossAndGrad {
    let (classes, dim) = (weights.num_classes(), weights.dim());
    let mut out = LossAndGrad::zero(classes, dim);
    if labels.is_empty() {
        return out;
    }
    let mut logits = vec![0.0; classes];
    for (x, &y) in features.iter_rows().zip(labels) {
        weights.logits_into(x, &mut logits);
        let lse = log_sum_exp(&logits);
        out.value += lse - logits[y];
        for k in 0..classes {
            let coef = (logits[k] - lse).exp() - if k == y { 1.0 } else { 0.0 };
            axpy(coef, x, out.grad.theta_mut().row_mut(k));
            out.grad.bias_mut()[k] += coef;
        }
    }
    scale(&mut out, 1.0 / labels.len() as f64);
    out
}

/// Mean over variant sets of `-ln(exp(s_pos) / sum_j exp(s_j))`, where
/// `s_j = theta_k . x_j` scores every variant for the set's class `k`. The
/// denominator includes the positive. Intercepts cancel, so their gradient is zero.
pub fn contrastive_rationale_loss(
    weights: &ClassifierWeights,
    variants: &VariantBatch,
) -> LossAndGrad {
    let (classes, dim) = (weights.num_classes(), weights.dim());
    let mut out = LossAndGrad::zero(classes, dim);
    if variants.is_empty() {
        return out;
    }
    let mut scores = vec![0.0; variants.m()];
    for (i, &k) in variants.labels().iter().enumerate() {
        let anchor = weights.class_weights(k);
        for (s, x) in scores.iter_mut().zip(variants.set_rows(i)) {
            *s = dot(anchor, x);
        }
        let lse = log_sum_exp(&scores);
        out.value += lse - scores[0];
        let grad_k = out.grad.theta_mut().row_mut(k);
        for (j, x) in variants.set_rows(i).enumerate() {
            let coef = (scores[j] - lse).exp() - if j == 0 { 1.0 } else { 0.0 };
            axpy(coef, x, grad_k);
        }
    }
    scale(&mut out, 1.0 / variants.len() as f64);
    out
}

/// `(l2_strength / 2) * sum_k ||theta_k||^2`; intercepts are not penalized.
pub fn l2_penalty(weights: &ClassifierWeights, l2_strength: f64) -> LossAndGrad {
    let mut out = LossAndGrad::zero(weights.num_classes(), weights.dim());
    let theta = weights.theta().as_slice();
    out.value = 0.5 * l2_strength * dot(theta, theta);
    for (g, t) in out.grad.theta_mut().as_mut_slice().iter_mut().zip(theta) {
        *g = l2_strength * t;
    }
    out
}

/// `w1 * CE + w2 * CRL + R(theta)`. A zero weight skips its loss entirely.
pub fn scalarized_objective(problem: &TrainingProblem, weights: &ClassifierWeights) -> LossAndGrad {
    let mut out = l2_penalty(weights, problem.l2_strength);
    let w = problem.trade_off;
    if w.w1 != 0.0 {
        out.add_scaled(
            w.w1,
            &cross_entropy(weights, &problem.features, &problem.labels),
        );
    }
    if w.w2 != 0.0 {
        out.add_scaled(
            w.w2,
            &contrastive_rationale_loss(weights, &problem.variants),
        );
    }
    out
}

fn scale(out: &mut LossAndGrad, factor: f64) {
    out.value *= factor;
    out.grad
        .theta_mut()
        .as_mut_slice()
        .iter_mut()
        .for_each(|g| *g *= factor);
    out.grad.bias_mut().iter_mut().for_each(|g| *g *= factor);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TradeOff;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    }

    #[test]
    fn cross_entropy_anchors() {
        let x = Matrix::from_vec(2, 2, vec![1.0, -2.0, 0.5, 3.0]).unwrap();
        let ce = cross_entropy(&ClassifierWeights::zeros(2, 2), &x, &[0, 1]);
        assert!((ce.value - 2f64.ln()).abs() < 1e-15);

        let w = ClassifierWeights::new(Matrix::zeros(2, 1), vec![2.0, 0.0]).unwrap();
        let x = Matrix::from_vec(1, 1, vec![0.0]).unwrap();
        let ce = cross_entropy(&w, &x, &[0]);
        assert!((ce.value - (1.0 + (-2f64).exp()).ln()).abs() < 1e-15);
        assert!((ce.value - 0.126928).abs() < 1e-6);
    }

    #[test]
    fn contrastive_anchors() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rows = random_matrix(&mut rng, 3, 4);
        let batch = VariantBatch::from_parts(3, rows, vec![1]).unwrap();
        let crl = contrastive_rationale_loss(&ClassifierWeights::zeros(2, 4), &batch);
        assert_eq!(crl.value, 3f64.ln());

        let rows = random_matrix(&mut rng, 2, 4);
        let single = VariantBatch::from_parts(1, rows, vec![0, 1]).unwrap();
        let w = ClassifierWeights::new(random_matrix(&mut rng, 2, 4), vec![0.3, -0.2]).unwrap();
        assert_eq!(contrastive_rationale_loss(&w, &single).value, 0.0);
    }

    #[test]
    fn contrastive_ignores_negative_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rows = random_matrix(&mut rng, 4, 3);
        let mut swapped = rows.clone();
        swapped.row_mut(1).copy_from_slice(rows.row(3));
        swapped.row_mut(3).copy_from_slice(rows.row(1));
        let w = ClassifierWeights::new(random_matrix(&mut rng, 2, 3), vec![0.0, 0.0]).unwrap();
        let a =
            contrastive_rationale_loss(&w, &VariantBatch::from_parts(4, rows, vec![1]).unwrap());
        let b =
            contrastive_rationale_loss(&w, &VariantBatch::from_parts(4, swapped, vec![1]).unwrap());
        assert!((a.value - b.value).abs() < 1e-14);
    }

    #[test]
    fn scalarization_composes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_matrix(&mut rng, 6, 3);
        let labels = vec![0, 1, 2, 0, 1, 2];
        let variants =
            VariantBatch::from_parts(2, random_matrix(&mut rng, 4, 3), vec![0, 2]).unwrap();
        let problem = TrainingProblem::new(
            x.clone(),
            labels.clone(),
            3,
            variants.clone(),
            0.0,
            TradeOff::CROSS_ENTROPY_ONLY,
        )
        .unwrap();
        let w =
            ClassifierWeights::new(random_matrix(&mut rng, 3, 3), vec![0.1, 0.2, -0.3]).unwrap();

        let ce = cross_entropy(&w, &x, &labels).value;
        assert_eq!(scalarized_objective(&problem, &w).value, ce);

        let half = TrainingProblem {
            l2_strength: 0.7,
            trade_off: TradeOff::new(0.5, 0.5).unwrap(),
            ..problem.clone()
        };
        let crl = contrastive_rationale_loss(&w, &variants).value;
        let r = l2_penalty(&w, 0.7).value;
        assert!((scalarized_objective(&half, &w).value - (0.5 * (ce + crl) + r)).abs() < 1e-12);

        let zero = ClassifierWeights::zeros(3, 3);
        let mixed = TrainingProblem {
            trade_off: TradeOff::new(0.3, 0.7).unwrap(),
            ..half
        };
        let expected = 0.3 * 3f64.ln() + 0.7 * 2f64.ln();
        assert!((scalarized_objective(&mixed, &zero).value - expected).abs() < 1e-12);
    }
}
