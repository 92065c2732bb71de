use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

/// Per-column z-score transform fitted on training rows. Columns without
/// spread keep a unit scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    #[serde(with = "crate::hexfloat::vec")]
    pub means: Vec<f64>,
    #[serde(with = "crate::hexfloat::vec")]
    pub scales: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: ArrayView2<'_, f64>) -> Self {
        let n = x.nrows().max(1) as f64;
        let mut means = Vec::with_capacity(x.ncols());
        let mut scales = Vec::with_capacity(x.ncols());
        for col in x.columns() {
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            means.push(mean);
            scales.push(if var > 0.0 { var.sqrt() } else { 1.0 });
        }
        Self { means, scales }
    }

    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = x.as_standard_layout().into_owned();
        for mut row in out.rows_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.means).zip(&self.scales) {
                *v = (*v - m) / s;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_mean_unit_variance_and_constant_columns() {
        let x = array![[1.0, 5.0], [3.0, 5.0]];
        let s = Standardizer::fit(x.view());
        let t = s.transform(x.view());
        assert_eq!(t, array![[-1.0, 0.0], [1.0, 0.0]]);
    }

    #[test]
    fn output_is_row_major_for_any_input_layout() {
        use ndarray::ShapeBuilder;
        let x = Array2::from_shape_vec((2, 3).f(), vec![1.0, 3.0, 2.0, 4.0, 0.5, 1.5]).unwrap();
        assert!(!x.is_standard_layout());
        let s = Standardizer::fit(x.view());
        let t = s.transform(x.view());
        assert!(t.as_slice().is_some());
        assert_eq!(t, s.transform(x.as_standard_layout().view()));
    }
}
