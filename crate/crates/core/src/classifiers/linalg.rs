//! Dense symmetric positive-definite solves used by the LS-SVM and the
//! logistic Newton iterations.

use crate::error::{Error, Result};

/// Lower Cholesky factor of a row-major `n × n` SPD matrix, stored row-major.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    /// Factors `matrix` in place; only the lower triangle is read.
    pub fn factor(mut matrix: Vec<f64>, n: usize) -> Result<Self> {
        assert_eq!(matrix.len(), n * n, "matrix must be n × n");
        for i in 0..n {
            let (done, rest) = matrix.split_at_mut(i * n);
            let row_i = &mut rest[..n];
            for j in 0..i {
                let row_j = &done[j * n..j * n + j + 1];
                let dot = dot(&row_i[..j], &row_j[..j]);
                row_i[j] = (row_i[j] - dot) / row_j[j];
            }
            let diag = row_i[i] - dot(&row_i[..i], &row_i[..i]);
            if !diag.is_finite() || diag <= 0.0 {
                return Err(Error::Numerical(format!(
                    "matrix is not positive definite (pivot {i} = {diag:e})"
                )));
            }
            row_i[i] = diag.sqrt();
            for v in &mut row_i[i + 1..] {
                *v = 0.0;
            }
        }
        Ok(Self { n, lower: matrix })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(rhs.len(), n);
        let mut y = rhs.to_vec();
        for i in 0..n {
            let row = &self.lower[i * n..i * n + i];
            y[i] = (y[i] - dot(row, &y[..i])) / self.lower[i * n + i];
        }
        for i in (0..n).rev() {
            let tail: f64 = (i + 1..n).map(|k| self.lower[k * n + i] * y[k]).sum();
            y[i] = (y[i] - tail) / self.lower[i * n + i];
        }
        y
    }
}

/// Four-way unrolled dot product; the accumulators let the compiler vectorize.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = c * 4;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in chunks * 4..a.len() {
        s += a[i] * b[i];
    }
    s
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}
