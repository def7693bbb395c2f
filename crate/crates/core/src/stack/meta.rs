use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::boost::{logloss, sigmoid};
use crate::error::{Error, Result};

pub const DEFAULT_META_LAMBDA: f64 = 1e-3;
const GRAD_TOL: f64 = 1e-8;
const MAX_ITERS: usize = 1000;

/// Logistic regression over base-model probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaLearner {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
}

impl MetaLearner {
    pub fn raw(&self, x: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        sigmoid(self.raw(x))
    }

    /// Probabilities for column-major inputs.
    pub fn predict_columns(&self, columns: &[Vec<f64>]) -> Vec<f64> {
        let n = columns.first().map_or(0, Vec::len);
        (0..n)
            .map(|r| {
                let x: Vec<f64> = columns.iter().map(|c| c[r]).collect();
                self.predict(&x)
            })
            .collect()
    }
}

fn objective(columns: &[Vec<f64>], labels: &[u8], beta: &DVector<f64>, lambda: f64) -> f64 {
    let d = columns.len();
    let n = labels.len() as f64;
    let loss: f64 = (0..labels.len())
        .map(|r| {
            let s = beta[d] + (0..d).map(|j| beta[j] * columns[j][r]).sum::<f64>();
            logloss(labels[r], s)
        })
        .sum();
    loss / n + 0.5 * lambda * (0..d).map(|j| beta[j] * beta[j]).sum::<f64>()
}

/// Minimises mean logloss + `½λ‖w‖²` (intercept unpenalised) by damped
/// Newton steps with backtracking, until the gradient norm falls below 1e-8
/// or 1000 iterations. Accepts any number of columns.
pub fn fit_logistic(columns: &[Vec<f64>], labels: &[u8], lambda: f64) -> Result<MetaLearner> {
    let d = columns.len();
    let n = labels.len();
    if n == 0 {
        return Err(Error::Training("meta-learner needs rows".into()));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidParam(format!(
            "meta lambda must be >= 0, got {lambda}"
        )));
    }
    for c in columns {
        if c.len() != n {
            return Err(Error::Schema(format!(
                "meta column has {} rows, labels {n}",
                c.len()
            )));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::Training("non-finite meta-learner input".into()));
        }
    }
    let nf = n as f64;
    let mut beta = DVector::<f64>::zeros(d + 1);
    let mut iterations = 0;
    let mut grad_norm = f64::INFINITY;
    let mut current = objective(columns, labels, &beta, lambda);
    while iterations < MAX_ITERS {
        let mut grad = DVector::<f64>::zeros(d + 1);
        let mut hess = DMatrix::<f64>::zeros(d + 1, d + 1);
        let mut x = vec![1.0; d + 1];
        for r in 0..n {
            for j in 0..d {
                x[j] = columns[j][r];
            }
            let s: f64 = (0..=d).map(|j| beta[j] * x[j]).sum();
            let p = sigmoid(s);
            let g = p - f64::from(labels[r]);
            let h = p * (1.0 - p);
            for a in 0..=d {
                grad[a] += g * x[a] / nf;
                for b in 0..=a {
                    hess[(a, b)] += h * x[a] * x[b] / nf;
                }
            }
        }
        for a in 0..=d {
            for b in 0..a {
                hess[(b, a)] = hess[(a, b)];
            }
        }
        for j in 0..d {
            grad[j] += lambda * beta[j];
            hess[(j, j)] += lambda;
        }
        grad_norm = grad.norm();
        if grad_norm < GRAD_TOL {
            break;
        }
        iterations += 1;
        // Levenberg damping keeps the system solvable when columns are
        // collinear and unpenalised.
        let mut mu = 1e-12 * (1.0 + hess.trace());
        let step = loop {
            let mut damped = hess.clone();
            for a in 0..=d {
                damped[(a, a)] += mu;
            }
            if let Some(ch) = damped.cholesky() {
                break ch.solve(&grad);
            }
            mu *= 10.0;
            if mu > 1e6 {
                return Err(Error::Training(
                    "meta-learner Hessian is not positive definite".into(),
                ));
            }
        };
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-12 {
            let trial = &beta - &step * t;
            let value = objective(columns, labels, &trial, lambda);
            if value <= current - 1e-4 * t * grad.dot(&step) {
                beta = trial;
                current = value;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if !current.is_finite() {
        return Err(Error::Training(
            "meta-learner objective is not finite".into(),
        ));
    }
    Ok(MetaLearner {
        weights: beta.as_slice()[..d].to_vec(),
        intercept: beta[d],
        lambda,
        iterations,
        grad_norm,
        converged: grad_norm < GRAD_TOL,
    })
}

/// Meta-learner over at least two base-model OOF columns.
pub fn fit_meta(columns: &[Vec<f64>], labels: &[u8], lambda: f64) -> Result<MetaLearner> {
    if columns.len() < 2 {
        return Err(Error::InvalidParam(format!(
            "meta-learner needs at least two base models, got {}",
            columns.len()
        )));
    }
    fit_logistic(columns, labels, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stationary_point() {
        let x = vec![
            vec![0.1, 0.9, 0.4, 0.7, 0.2, 0.8],
            vec![0.3, 0.6, 0.5, 0.5, 0.1, 0.9],
        ];
        let y = [0, 1, 0, 1, 1, 1];
        let m = fit_meta(&x, &y, 1e-3).unwrap();
        assert!(m.converged, "{m:?}");
        // Finite-difference gradient of the objective vanishes.
        let beta = DVector::from_iterator(3, m.weights.iter().copied().chain([m.intercept]));
        for j in 0..3 {
            let mut e = DVector::zeros(3);
            e[j] = 1e-6;
            let fd = (objective(&x, &y, &(&beta + &e), 1e-3)
                - objective(&x, &y, &(&beta - &e), 1e-3))
                / 2e-6;
            assert!(fd.abs() < 1e-6, "{j}: {fd}");
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_meta(&[vec![0.5]], &[1], 1e-3).is_err());
        assert!(fit_meta(&[vec![0.5, f64::NAN], vec![0.1, 0.2]], &[1, 0], 1e-3).is_err());
        assert!(fit_meta(&[vec![0.5], vec![0.1, 0.2]], &[1, 0], 1e-3).is_err());
    }
}
