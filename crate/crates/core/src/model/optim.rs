//! Full-batch L-BFGS with Armijo backtracking, started from zero weights.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm2, norm_inf};
use crate::model::{scalarized_objective, ClassifierWeights, TrainingProblem};

pub const DEFAULT_TOL: f64 = 1e-4;
pub const DEFAULT_MAX_ITER: usize = 1000;

const HISTORY: usize = 10;
const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub weights: ClassifierWeights,
    /// Gradient infinity-norm reached `tol`.
    pub converged: bool,
    pub iterations: usize,
    pub objective: f64,
    pub grad_inf_norm: f64,
    /// Objective at every accepted iterate, starting with the zero initialization.
    pub trace: Vec<f64>,
}

struct Evaluator<'a> {
    problem: &'a TrainingProblem,
    classes: usize,
    dim: usize,
}

impl Evaluator<'_> {
    fn eval(&self, params: &[f64]) -> (f64, Vec<f64>) {
        let weights = ClassifierWeights::from_params(self.classes, self.dim, params)
            .expect("parameter length");
        let out = scalarized_objective(self.problem, &weights);
        (out.value, out.grad.to_params())
    }
}

/// Minimizes the scalarized objective until the gradient infinity-norm is at
/// most `tol` or `max_iter` iterations have run.
pub fn train(problem: &TrainingProblem, tol: f64, max_iter: usize) -> Result<TrainOutcome> {
    let evaluator = Evaluator {
        problem,
        classes: problem.num_classes,
        dim: problem.dim(),
    };
    let mut x = ClassifierWeights::zeros(problem.num_classes, problem.dim()).to_params();
    let (mut f, mut g) = evaluator.eval(&x);
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence { iteration: 0 });
    }

    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(HISTORY);
    let mut trace = vec![f];
    let mut iterations = 0;
    let mut converged = norm_inf(&g) <= tol;

    while !converged && iterations < max_iter {
        iterations += 1;
        let (mut direction, mut step) = if memory.is_empty() {
            steepest(&g)
        } else {
            (two_loop(&g, &memory), 1.0)
        };
        let mut slope = dot(&g, &direction);
        if !(slope < 0.0) {
            memory.clear();
            (direction, step) = steepest(&g);
            slope = dot(&g, &direction);
        }

        let mut accepted = None;
        let mut saw_finite = false;
        for _ in 0..MAX_BACKTRACKS {
            let mut candidate = x.clone();
            axpy(step, &direction, &mut candidate);
            let (fc, gc) = evaluator.eval(&candidate);
            if fc.is_finite() && gc.iter().all(|v| v.is_finite()) {
                saw_finite = true;
                if fc <= f + ARMIJO_C1 * step * slope {
                    accepted = Some((candidate, fc, gc));
                    break;
                }
            }
            step *= 0.5;
        }

        let Some((x_new, f_new, g_new)) = accepted else {
            if !saw_finite {
                return Err(Error::Divergence {
                    iteration: iterations,
                });
            }
            if memory.is_empty() {
                // steepest descent cannot make progress either
                break;
            }
            memory.clear();
            continue;
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm2(&s) * norm2(&y) && sy > 0.0 {
            if memory.len() == HISTORY {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        x = x_new;
        f = f_new;
        g = g_new;
        trace.push(f);
        converged = norm_inf(&g) <= tol;
    }

    Ok(TrainOutcome {
        weights: ClassifierWeights::from_params(problem.num_classes, problem.dim(), &x)?,
        converged,
        iterations,
        objective: f,
        grad_inf_norm: norm_inf(&g),
        trace,
    })
}

fn steepest(g: &[f64]) -> (Vec<f64>, f64) {
    let norm = norm2(g);
    let step = if norm > 1.0 { 1.0 / norm } else { 1.0 };
    (g.iter().map(|v| -v).collect(), step)
}

fn two_loop(g: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let alpha = rho * dot(s, &q);
        axpy(-alpha, y, &mut q);
        alphas.push(alpha);
    }
    let (s, y, _) = memory.back().expect("non-empty memory");
    let gamma = dot(s, y) / dot(y, y);
    q.iter_mut().for_each(|v| *v *= gamma);
    for ((s, y, rho), alpha) in memory.iter().zip(alphas.into_iter().rev()) {
        let beta = rho * dot(y, &q);
        axpy(alpha - beta, s, &mut q);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}
