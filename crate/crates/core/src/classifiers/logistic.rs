//! Binary logistic regression (Newton iterations) and multinomial softmax
//! regression (gradient descent with backtracking), both with a small fixed
//! L2 penalty on the non-intercept weights.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::linalg::{dot, norm, Cholesky};
use super::scaling::Standardizer;
use super::spec::{LinearParams, LOGREG_MAX_ITERATIONS, MULTINOMIAL_MAX_ITERATIONS};
use super::{sigmoid, FitDiagnostics};

pub const GRADIENT_TOLERANCE: f64 = 1e-6;
const ARMIJO: f64 = 1e-4;

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean log-loss plus `l2/2·‖β‖²` and its gradient, for `theta = [α, β…]`.
pub fn logistic_objective(theta: &[f64], x: ArrayView2<'_, f64>, y: &[usize], l2: f64) -> (f64, Vec<f64>) {
    let n = x.nrows() as f64;
    let d = x.ncols();
    let mut loss = 0.0;
    let mut grad = vec![0.0; d + 1];
    for (row, &label) in x.rows().into_iter().zip(y) {
        let z = theta[0] + row.iter().zip(&theta[1..]).map(|(a, b)| a * b).sum::<f64>();
        let t = label as f64;
        loss += softplus(z) - t * z;
        let r = sigmoid(z) - t;
        grad[0] += r;
        for (g, v) in grad[1..].iter_mut().zip(row.iter()) {
            *g += r * v;
        }
    }
    loss /= n;
    grad.iter_mut().for_each(|g| *g /= n);
    for (g, b) in grad[1..].iter_mut().zip(&theta[1..]) {
        *g += l2 * b;
    }
    loss += 0.5 * l2 * dot(&theta[1..], &theta[1..]);
    (loss, grad)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogReg {
    pub scaler: Standardizer,
    #[serde(with = "crate::hexfloat")]
    pub intercept: f64,
    #[serde(with = "crate::hexfloat::vec")]
    pub weights: Vec<f64>,
}

impl LogReg {
    pub fn fit(x: ArrayView2<'_, f64>, labels: &[usize], params: &LinearParams) -> (Self, FitDiagnostics) {
        let scaler = Standardizer::fit(x);
        let xs = scaler.transform(x);
        let (n, d) = xs.dim();
        let cap = params.max_iterations.unwrap_or(LOGREG_MAX_ITERATIONS);
        let mut theta = vec![0.0; d + 1];
        let (mut loss, mut grad) = logistic_objective(&theta, xs.view(), labels, params.l2);
        let mut iterations = 0;
        let mut converged = norm(&grad) < GRADIENT_TOLERANCE;
        while !converged && iterations < cap {
            iterations += 1;
            // Hessian of the mean loss in the augmented [1, x] basis
            let m = d + 1;
            let mut hess = vec![0.0; m * m];
            let mut aug = vec![1.0; m];
            for row in xs.rows() {
                aug[1..].iter_mut().zip(row.iter()).for_each(|(a, v)| *a = *v);
                let z = dot(&theta, &aug);
                let w = sigmoid(z) * (1.0 - sigmoid(z)) / n as f64;
                for i in 0..m {
                    let wi = w * aug[i];
                    for j in 0..=i {
                        hess[i * m + j] += wi * aug[j];
                    }
                }
            }
            for i in 0..m {
                for j in 0..i {
                    hess[j * m + i] = hess[i * m + j];
                }
                hess[i * m + i] += if i == 0 { 1e-12 } else { params.l2 };
            }
            let direction = match Cholesky::factor(hess, m) {
                Ok(chol) => chol.solve(&grad),
                Err(_) => grad.clone(),
            };
            let slope = dot(&grad, &direction);
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..50 {
                let trial: Vec<f64> = theta.iter().zip(&direction).map(|(t, p)| t - step * p).collect();
                let (trial_loss, trial_grad) = logistic_objective(&trial, xs.view(), labels, params.l2);
                if trial_loss <= loss - ARMIJO * step * slope {
                    theta = trial;
                    loss = trial_loss;
                    grad = trial_grad;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            converged = norm(&grad) < GRADIENT_TOLERANCE;
            if !accepted {
                break;
            }
        }
        let model = LogReg {
            scaler,
            intercept: theta[0],
            weights: theta[1..].to_vec(),
        };
        (model, FitDiagnostics::iterative(iterations, cap, converged))
    }

    pub fn positive_scores(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        let xs = self.scaler.transform(x);
        xs.rows()
            .into_iter()
            .map(|row| sigmoid(self.intercept + row.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>()))
            .collect()
    }
}

/// Row-wise softmax in place.
pub fn softmax_in_place(values: &mut [f64]) {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in values.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    values.iter_mut().for_each(|v| *v /= total);
}

/// Mean cross-entropy of a softmax model plus `l2/2·Σ‖B_i‖²` (intercepts excluded).
///
/// `params` is `classes × (d + 1)` row-major with the intercept in column 0.
pub fn multinomial_objective(
    params: &[f64],
    classes: usize,
    x: ArrayView2<'_, f64>,
    y: &[usize],
    l2: f64,
) -> (f64, Vec<f64>) {
    let n = x.nrows() as f64;
    let m = x.ncols() + 1;
    let mut loss = 0.0;
    let mut grad = vec![0.0; classes * m];
    let mut scores = vec![0.0; classes];
    for (row, &label) in x.rows().into_iter().zip(y) {
        for (c, s) in scores.iter_mut().enumerate() {
            let b = &params[c * m..(c + 1) * m];
            *s = b[0] + row.iter().zip(&b[1..]).map(|(a, w)| a * w).sum::<f64>();
        }
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_total = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
        loss += log_total - scores[label];
        for c in 0..classes {
            let r = (scores[c] - log_total).exp() - f64::from(u8::from(c == label));
            let g = &mut grad[c * m..(c + 1) * m];
            g[0] += r;
            for (gj, v) in g[1..].iter_mut().zip(row.iter()) {
                *gj += r * v;
            }
        }
    }
    loss /= n;
    grad.iter_mut().for_each(|g| *g /= n);
    for c in 0..classes {
        for j in 1..m {
            let w = params[c * m + j];
            grad[c * m + j] += l2 * w;
            loss += 0.5 * l2 * w * w;
        }
    }
    (loss, grad)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multinomial {
    pub scaler: Standardizer,
    pub classes: usize,
    /// `classes × (d + 1)`, intercept first.
    #[serde(with = "crate::hexfloat::vec")]
    pub params: Vec<f64>,
}

impl Multinomial {
    pub fn fit(
        x: ArrayView2<'_, f64>,
        labels: &[usize],
        classes: usize,
        params: &LinearParams,
    ) -> (Self, FitDiagnostics) {
        let scaler = Standardizer::fit(x);
        let xs = scaler.transform(x);
        let m = xs.ncols() + 1;
        let cap = params.max_iterations.unwrap_or(MULTINOMIAL_MAX_ITERATIONS);
        let mut theta = vec![0.0; classes * m];
        let (mut loss, mut grad) = multinomial_objective(&theta, classes, xs.view(), labels, params.l2);
        let mut step = 1.0;
        let mut iterations = 0;
        let mut converged = norm(&grad) < GRADIENT_TOLERANCE;
        while !converged && iterations < cap {
            iterations += 1;
            let g2 = dot(&grad, &grad);
            let mut accepted = false;
            step *= 2.0;
            for _ in 0..60 {
                let trial: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t - step * g).collect();
                let (trial_loss, trial_grad) = multinomial_objective(&trial, classes, xs.view(), labels, params.l2);
                if trial_loss <= loss - ARMIJO * step * g2 {
                    theta = trial;
                    loss = trial_loss;
                    grad = trial_grad;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            converged = norm(&grad) < GRADIENT_TOLERANCE;
            if !accepted {
                break;
            }
        }
        (
            Multinomial {
                scaler,
                classes,
                params: theta,
            },
            FitDiagnostics::iterative(iterations, cap, converged),
        )
    }

    pub fn from_parameters(scaler: Standardizer, classes: usize, params: Vec<f64>) -> Self {
        Self {
            scaler,
            classes,
            params,
        }
    }

    pub fn scores(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let xs = self.scaler.transform(x);
        let m = xs.ncols() + 1;
        let mut out = Array2::zeros((xs.nrows(), self.classes));
        for (row, mut target) in xs.rows().into_iter().zip(out.rows_mut()) {
            let slot = target.as_slice_mut().expect("standard layout");
            for (c, s) in slot.iter_mut().enumerate() {
                let b = &self.params[c * m..(c + 1) * m];
                *s = b[0] + row.iter().zip(&b[1..]).map(|(a, w)| a * w).sum::<f64>();
            }
            softmax_in_place(slot);
        }
        out
    }
}
