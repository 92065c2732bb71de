//! Single-hidden-layer perceptron with tanh units, trained by full-batch
//! gradient descent on cross-entropy. Two classes use one sigmoid output,
//! more classes use a softmax layer.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::linalg::norm;
use super::logistic::{softmax_in_place, GRADIENT_TOLERANCE};
use super::scaling::Standardizer;
use super::spec::MlpParams;
use super::{sigmoid, FitDiagnostics};

/// Parameter layout: `W1 (h×d) | b1 (h) | W2 (o×h) | b2 (o)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
}

impl Layout {
    pub fn for_classes(inputs: usize, hidden: usize, classes: usize) -> Self {
        Self {
            inputs,
            hidden,
            outputs: if classes == 2 { 1 } else { classes },
        }
    }

    pub fn len(&self) -> usize {
        self.hidden * (self.inputs + 1) + self.outputs * (self.hidden + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.hidden * self.inputs;
        let w2 = b1 + self.hidden;
        let b2 = w2 + self.outputs * self.hidden;
        (b1, w2, b2)
    }
}

struct Views<'a> {
    w1: ArrayView2<'a, f64>,
    b1: ArrayView1<'a, f64>,
    w2: ArrayView2<'a, f64>,
    b2: ArrayView1<'a, f64>,
}

fn views<'a>(layout: &Layout, w: &'a [f64]) -> Views<'a> {
    let (b1, w2, b2) = layout.offsets();
    let shape = |rows, cols, slice| ArrayView2::from_shape((rows, cols), slice).expect("layout sizes");
    Views {
        w1: shape(layout.hidden, layout.inputs, &w[..b1]),
        b1: ArrayView1::from(&w[b1..w2]),
        w2: shape(layout.outputs, layout.hidden, &w[w2..b2]),
        b2: ArrayView1::from(&w[b2..]),
    }
}

fn fast_tanh(v: f64) -> f64 {
    if v.abs() < 1e-3 {
        return v.tanh();
    }
    let e = (-2.0 * v.abs()).exp();
    ((1.0 - e) / (1.0 + e)).copysign(v)
}

/// Hidden activations (`n × h`) and output pre-activations (`n × o`).
fn forward(layout: &Layout, w: &[f64], x: ArrayView2<'_, f64>) -> (Array2<f64>, Array2<f64>) {
    let v = views(layout, w);
    let mut hidden = x.dot(&v.w1.t()) + v.b1;
    hidden.mapv_inplace(fast_tanh);
    let out = hidden.dot(&v.w2.t()) + v.b2;
    (hidden, out)
}

/// Mean cross-entropy and its gradient with respect to the flat parameters.
pub fn mlp_objective(layout: &Layout, w: &[f64], x: ArrayView2<'_, f64>, y: &[usize]) -> (f64, Vec<f64>) {
    let n = x.nrows() as f64;
    let (hidden, mut delta) = forward(layout, w, x);
    let mut loss = 0.0;
    for (mut row, &label) in delta.rows_mut().into_iter().zip(y) {
        if layout.outputs == 1 {
            let z = row[0];
            let t = label as f64;
            let softplus = if z > 0.0 {
                z + (-z).exp().ln_1p()
            } else {
                z.exp().ln_1p()
            };
            loss += softplus - t * z;
            row[0] = sigmoid(z) - t;
        } else {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let log_total = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            loss += log_total - row[label];
            for (o, v) in row.iter_mut().enumerate() {
                *v = (*v - log_total).exp() - f64::from(u8::from(o == label));
            }
        }
    }
    delta.mapv_inplace(|v| v / n);
    let v = views(layout, w);
    let g_w2 = delta.t().dot(&hidden);
    let g_b2 = delta.sum_axis(Axis(0));
    let mut back = delta.dot(&v.w2);
    back.zip_mut_with(&hidden, |b, h| *b *= 1.0 - h * h);
    let g_w1 = back.t().dot(&x);
    let g_b1 = back.sum_axis(Axis(0));
    let mut grad = Vec::with_capacity(layout.len());
    grad.extend(g_w1.iter());
    grad.extend(g_b1.iter());
    grad.extend(g_w2.iter());
    grad.extend(g_b2.iter());
    (loss / n, grad)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub scaler: Standardizer,
    pub layout: Layout,
    pub classes: usize,
    #[serde(with = "crate::hexfloat::vec")]
    pub weights: Vec<f64>,
}

impl Mlp {
    pub fn fit(
        x: ArrayView2<'_, f64>,
        labels: &[usize],
        classes: usize,
        params: &MlpParams,
        seed: u64,
    ) -> (Self, FitDiagnostics) {
        let scaler = Standardizer::fit(x);
        let xs = scaler.transform(x);
        let layout = Layout::for_classes(xs.ncols(), params.hidden_nodes, classes);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights: Vec<f64> = (0..layout.len()).map(|_| rng.gen_range(-0.5..=0.5)).collect();
        let mut epochs = 0;
        let mut converged = false;
        while epochs < params.epochs {
            let (_, grad) = mlp_objective(&layout, &weights, xs.view(), labels);
            if norm(&grad) < GRADIENT_TOLERANCE {
                converged = true;
                break;
            }
            for (w, g) in weights.iter_mut().zip(&grad) {
                *w -= params.learning_rate * g;
            }
            epochs += 1;
        }
        let finite = weights.iter().all(|w| w.is_finite());
        (
            Mlp {
                scaler,
                layout,
                classes,
                weights,
            },
            FitDiagnostics::iterative(epochs, params.epochs, converged && finite),
        )
    }

    /// Class probabilities, one row per sample.
    pub fn scores(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let xs = self.scaler.transform(x);
        let (_, out) = forward(&self.layout, &self.weights, xs.view());
        let mut scores = Array2::zeros((xs.nrows(), self.classes));
        for (z, mut target) in out.rows().into_iter().zip(scores.rows_mut()) {
            if self.layout.outputs == 1 {
                let p = sigmoid(z[0]);
                target[0] = 1.0 - p;
                target[1] = p;
            } else {
                let mut probs = z.to_vec();
                softmax_in_place(&mut probs);
                target.iter_mut().zip(&probs).for_each(|(t, v)| *t = *v);
            }
        }
        scores
    }
}
