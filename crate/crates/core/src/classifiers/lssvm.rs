//! Least-squares SVM with an RBF kernel.
//!
//! Training solves the dual system
//!
//! ```text
//! [ 0   1ᵀ          ] [ b ]   [ 0 ]
//! [ 1   K + λ·I     ] [ a ] = [ y ]
//! ```
//!
//! where `a_j = α_j·y_j` and `y ∈ {−1, +1}`. The bordered system is reduced
//! to two solves with the SPD block `H = K + λI`:
//! `H η = 1`, `H ν = y`, `b = 1ᵀν / 1ᵀη`, `a = ν − b·η`.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::linalg::{dot, norm, squared_distance, Cholesky};
use super::scaling::Standardizer;
use super::spec::LsSvmParams;
use super::FitDiagnostics;
use crate::dataset::SignEncoding;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsSvm {
    pub scaler: Standardizer,
    #[serde(with = "crate::hexfloat")]
    pub kernel_gamma: f64,
    #[serde(with = "crate::hexfloat")]
    pub lambda: f64,
    /// Standardized training rows (every row is a support vector).
    pub n_support: usize,
    #[serde(with = "crate::hexfloat::vec")]
    pub support: Vec<f64>,
    /// Training labels in {−1, +1}.
    #[serde(with = "crate::hexfloat::vec")]
    pub targets: Vec<f64>,
    /// Dual coefficients α_j.
    #[serde(with = "crate::hexfloat::vec")]
    pub alpha: Vec<f64>,
    #[serde(with = "crate::hexfloat")]
    pub bias: f64,
}

pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    (-gamma * squared_distance(a, b)).exp()
}

fn kernel_matrix(rows: &Array2<f64>, gamma: f64) -> Vec<f64> {
    let n = rows.nrows();
    let d = rows.ncols();
    let flat = rows.as_slice().expect("standard layout");
    let norms: Vec<f64> = (0..n)
        .map(|i| dot(&flat[i * d..(i + 1) * d], &flat[i * d..(i + 1) * d]))
        .collect();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        let ri = &flat[i * d..(i + 1) * d];
        for j in 0..=i {
            let rj = &flat[j * d..(j + 1) * d];
            let dist = (norms[i] + norms[j] - 2.0 * dot(ri, rj)).max(0.0);
            let v = (-gamma * dist).exp();
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

/// Normwise backward error `‖A x − r‖ / (‖A‖_F ‖x‖ + ‖r‖)` of the bordered system.
pub fn dual_residual(kernel: &[f64], lambda: f64, targets: &[f64], coef: &[f64], bias: f64) -> f64 {
    let n = targets.len();
    let mut residual = Vec::with_capacity(n + 1);
    residual.push(coef.iter().sum::<f64>());
    let mut frob = n as f64 * 2.0;
    for i in 0..n {
        let row = &kernel[i * n..(i + 1) * n];
        residual.push(dot(row, coef) + lambda * coef[i] + bias - targets[i]);
        frob += dot(row, row) + 2.0 * lambda * row[i] + lambda * lambda;
    }
    let x_norm = (norm(coef).powi(2) + bias * bias).sqrt();
    norm(&residual) / (frob.sqrt() * x_norm + norm(targets))
}

pub struct LsSvmFit {
    pub model: LsSvm,
    pub diagnostics: FitDiagnostics,
    /// Backward error of the solved dual system.
    pub residual: f64,
}

impl LsSvm {
    /// `labels` are class ids in {0, 1}.
    pub fn fit(x: ArrayView2<'_, f64>, labels: &[usize], params: &LsSvmParams) -> Result<LsSvmFit> {
        let scaler = Standardizer::fit(x);
        let rows = scaler.transform(x);
        let (n, d) = rows.dim();
        let gamma = params.kernel_gamma.unwrap_or(1.0 / d as f64);
        let targets: Vec<f64> = labels.iter().map(|&l| SignEncoding::encode(l)).collect();
        let kernel = kernel_matrix(&rows, gamma);
        let mut h = kernel.clone();
        for i in 0..n {
            h[i * n + i] += params.lambda;
        }
        let chol = Cholesky::factor(h, n)?;
        let eta = chol.solve(&vec![1.0; n]);
        let nu = chol.solve(&targets);
        let bias = nu.iter().sum::<f64>() / eta.iter().sum::<f64>();
        let mut coef: Vec<f64> = nu.iter().zip(&eta).map(|(v, e)| v - bias * e).collect();
        let mut bias = bias;

        // one step of iterative refinement on the bordered system
        let r0 = -coef.iter().sum::<f64>();
        let r: Vec<f64> = (0..n)
            .map(|i| targets[i] - (dot(&kernel[i * n..(i + 1) * n], &coef) + params.lambda * coef[i] + bias))
            .collect();
        let nu_r = chol.solve(&r);
        let db = (nu_r.iter().sum::<f64>() - r0) / eta.iter().sum::<f64>();
        for ((c, v), e) in coef.iter_mut().zip(&nu_r).zip(&eta) {
            *c += v - db * e;
        }
        bias += db;

        let residual = dual_residual(&kernel, params.lambda, &targets, &coef, bias);
        let alpha = coef.iter().zip(&targets).map(|(c, y)| c * y).collect();
        let model = LsSvm {
            scaler,
            kernel_gamma: gamma,
            lambda: params.lambda,
            n_support: n,
            support: rows.into_raw_vec_and_offset().0,
            targets,
            alpha,
            bias,
        };
        Ok(LsSvmFit {
            model,
            diagnostics: FitDiagnostics::direct(),
            residual,
        })
    }

    /// Raw decision value `Σ α_j y_j K(x, x_j) + b` for every row.
    pub fn decision_values(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        let rows = self.scaler.transform(x);
        let d = rows.ncols();
        let support: Vec<&[f64]> = self.support.chunks(d.max(1)).collect();
        let weights: Vec<f64> = self.alpha.iter().zip(&self.targets).map(|(a, y)| a * y).collect();
        rows.rows()
            .into_iter()
            .map(|row| {
                let row = row.as_slice().expect("standard layout");
                support
                    .iter()
                    .zip(&weights)
                    .map(|(s, w)| w * rbf(row, s, self.kernel_gamma))
                    .sum::<f64>()
                    + self.bias
            })
            .collect()
    }

    /// Logistic squash of the decision value (unit slope).
    pub fn positive_scores(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        self.decision_values(x).into_iter().map(super::sigmoid).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn symmetric_pair_is_reproduced() {
        let x = array![[-1.0], [1.0]];
        let fit = LsSvm::fit(
            x.view(),
            &[0, 1],
            &LsSvmParams {
                lambda: 1e-6,
                kernel_gamma: None,
            },
        )
        .unwrap();
        let f = fit.model.decision_values(x.view());
        assert!(f[0] < 0.0 && f[1] > 0.0);
        assert!(fit.model.bias.abs() < 1e-9);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn residual_small_with_duplicate_rows() {
        let x = array![[0.0, 1.0], [0.0, 1.0], [1.0, 0.0], [2.0, 2.0], [2.0, 2.0], [3.0, 1.0]];
        let labels = [0, 1, 0, 1, 1, 0];
        let fit = LsSvm::fit(
            x.view(),
            &labels,
            &LsSvmParams {
                lambda: 1e-6,
                kernel_gamma: Some(0.7),
            },
        )
        .unwrap();
        assert!(fit.residual <= 1e-8, "residual {}", fit.residual);
    }
}
