//! Independent reference implementations the library is checked against.

use rationale_frontier::linalg::Matrix;
use rationale_frontier::model::{ClassifierWeights, LossAndGrad, TradeOff};
use rationale_frontier::moo::ObjectivePoint;

use super::{normal, rng};

const H: f64 = 1e-5;

/// Largest relative error between the analytic gradient and central differences.
pub fn gradient_error(
    weights: &ClassifierWeights,
    f: impl Fn(&ClassifierWeights) -> LossAndGrad,
) -> f64 {
    let (nc, d) = (weights.num_classes(), weights.dim());
    let analytic = f(weights).grad.to_params();
    let base = weights.to_params();
    let mut numeric = vec![0.0; base.len()];
    for i in 0..base.len() {
        let mut plus = base.clone();
        let mut minus = base.clone();
        plus[i] += H;
        minus[i] -= H;
        let fp = f(&ClassifierWeights::from_params(nc, d, &plus).unwrap()).value;
        let fm = f(&ClassifierWeights::from_params(nc, d, &minus).unwrap()).value;
        numeric[i] = (fp - fm) / (2.0 * H);
    }
    let diff: f64 = analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| (a - n).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale: f64 = analytic
        .iter()
        .map(|a| a * a)
        .sum::<f64>()
        .sqrt()
        .max(numeric.iter().map(|n| n * n).sum::<f64>().sqrt());
    if scale < 1e-8 {
        diff
    } else {
        diff / scale
    }
}

/// Parameters laid out as `theta` (class-major) followed by the biases.
pub struct Reference<'a> {
    pub x: &'a Matrix,
    pub y: &'a [usize],
    pub classes: usize,
    pub l2: f64,
}

impl Reference<'_> {
    fn dim(&self) -> usize {
        self.x.cols()
    }

    fn probs(&self, params: &[f64], row: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let logits: Vec<f64> = (0..self.classes)
            .map(|k| {
                let w = &params[k * d..(k + 1) * d];
                w.iter().zip(row).map(|(a, b)| a * b).sum::<f64>() + params[self.classes * d + k]
            })
            .collect();
        let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
        let z: f64 = e.iter().sum();
        e.iter().map(|v| v / z).collect()
    }

    pub fn loss(&self, params: &[f64]) -> f64 {
        let n = self.y.len() as f64;
        let d = self.dim();
        let nll: f64 = (0..self.y.len())
            .map(|i| -self.probs(params, self.x.row(i))[self.y[i]].ln())
            .sum::<f64>();
        let penalty: f64 = params[..self.classes * d].iter().map(|v| v * v).sum();
        nll / n + 0.5 * self.l2 * penalty
    }

    /// Gradient and full Hessian of `loss`.
    fn derivatives(&self, params: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let (c, d) = (self.classes, self.dim());
        let np = c * d + c;
        let n = self.y.len() as f64;
        let mut g = vec![0.0; np];
        let mut h = vec![vec![0.0; np]; np];
        // index of (class k, feature j), with j == d standing for the bias
        let at = |k: usize, j: usize| if j == d { c * d + k } else { k * d + j };
        for i in 0..self.y.len() {
            let row = self.x.row(i);
            let p = self.probs(params, row);
            let feat = |j: usize| if j == d { 1.0 } else { row[j] };
            for k in 0..c {
                let r = p[k] - if k == self.y[i] { 1.0 } else { 0.0 };
                for j in 0..=d {
                    g[at(k, j)] += r * feat(j) / n;
                }
                for l in 0..c {
                    let s = p[k] * (if k == l { 1.0 } else { 0.0 } - p[l]);
                    for j in 0..=d {
                        for jj in 0..=d {
                            h[at(k, j)][at(l, jj)] += s * feat(j) * feat(jj) / n;
                        }
                    }
                }
            }
        }
        for q in 0..c * d {
            g[q] += self.l2 * params[q];
            h[q][q] += self.l2;
        }
        (g, h)
    }

    pub fn solve(&self) -> Vec<f64> {
        let np = self.classes * self.dim() + self.classes;
        let mut params = vec![0.0; np];
        for _ in 0..100 {
            let (g, mut h) = self.derivatives(&params);
            if g.iter().all(|v| v.abs() < 1e-13) {
                break;
            }
            // the biases share one flat direction (adding a constant to all of them)
            for (q, row) in h.iter_mut().enumerate() {
                row[q] += 1e-12;
            }
            let step = gaussian_elimination(h, g.clone());
            let f0 = self.loss(&params);
            let slope: f64 = g.iter().zip(&step).map(|(a, b)| a * b).sum();
            let mut t = 1.0;
            loop {
                let cand: Vec<f64> = params.iter().zip(&step).map(|(p, s)| p - t * s).collect();
                if self.loss(&cand) <= f0 - 1e-4 * t * slope || t < 1e-10 {
                    params = cand;
                    break;
                }
                t *= 0.5;
            }
        }
        params
    }
}

pub fn gaussian_elimination(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for k in col..n {
                a[r][k] -= f * a[col][k];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Two-class model with pairwise interactions: p1 = sigmoid(b + a.m + m'Bm).
pub struct InteractionGame {
    pub bias: f64,
    pub linear: Vec<f64>,
    pub pairs: Vec<Vec<f64>>,
}

impl InteractionGame {
    pub fn random(p: usize, seed: u64) -> Self {
        let mut rng = rng(seed);
        Self {
            bias: normal(&mut rng),
            linear: (0..p).map(|_| normal(&mut rng)).collect(),
            pairs: (0..p)
                .map(|_| (0..p).map(|_| 0.5 * normal(&mut rng)).collect())
                .collect(),
        }
    }

    pub fn value(&self, mask: &[bool]) -> f64 {
        let mut z = self.bias;
        for i in 0..mask.len() {
            if !mask[i] {
                continue;
            }
            z += self.linear[i];
            for j in 0..i {
                if mask[j] {
                    z += self.pairs[i][j];
                }
            }
        }
        1.0 / (1.0 + (-z).exp())
    }
}

impl rationale_frontier::explain::MaskedPredictor for InteractionGame {
    fn predict_masked(&self, mask: &[bool]) -> rationale_frontier::Result<Vec<f64>> {
        let p1 = self.value(mask);
        Ok(vec![1.0 - p1, p1])
    }
}

/// Exact Shapley values by enumerating every coalition.
pub fn exact_shapley(game: &InteractionGame, p: usize) -> Vec<f64> {
    let fact: Vec<f64> = (0..=p)
        .scan(1.0, |acc, k| {
            let out = *acc;
            *acc *= (k + 1) as f64;
            Some(out)
        })
        .collect();
    let mut phi = vec![0.0; p];
    for bits in 0u32..(1 << p) {
        let mask: Vec<bool> = (0..p).map(|t| bits >> t & 1 == 1).collect();
        let size = mask.iter().filter(|&&b| b).count();
        let v = game.value(&mask);
        for t in 0..p {
            if mask[t] {
                continue;
            }
            let mut with = mask.clone();
            with[t] = true;
            let weight = fact[size] * fact[p - size - 1] / fact[p];
            phi[t] += weight * (game.value(&with) - v);
        }
    }
    phi
}

/// Average precision from each positive's rank, with ties broken by index.
pub fn reference_ap(scores: &[f64], rationale: &[bool]) -> f64 {
    let rank = |t: usize| {
        1 + (0..scores.len())
            .filter(|&s| scores[s] > scores[t] || (scores[s] == scores[t] && s < t))
            .count()
    };
    let positives: Vec<usize> = (0..scores.len()).filter(|&t| rationale[t]).collect();
    let total: f64 = positives
        .iter()
        .map(|&t| {
            let r = rank(t);
            let hits = positives.iter().filter(|&&u| rank(u) <= r).count();
            hits as f64 / r as f64
        })
        .sum();
    total / positives.len() as f64
}

/// f1 = (t-1)^2, f2 = (t+1)^2 with weighted optimum t = w1 - w2. The frontier
/// is sqrt(f1) + sqrt(f2) = 2 for t in [-1, 1].
pub fn toy(w: TradeOff) -> rationale_frontier::Result<(f64, f64)> {
    let t = w.w1 - w.w2;
    Ok(((t - 1.0).powi(2), (t + 1.0).powi(2)))
}

/// Non-dominated points by pairwise comparison.
pub fn brute_force_pareto(points: &[ObjectivePoint]) -> Vec<ObjectivePoint> {
    points
        .iter()
        .filter(|p| {
            !points
                .iter()
                .any(|q| q.f1 <= p.f1 && q.f2 <= p.f2 && (q.f1 < p.f1 || q.f2 < p.f2))
        })
        .copied()
        .collect()
}
