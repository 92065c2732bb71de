//! Classifier zoo with a uniform fit / score interface.
//!
//! Every trained model produces an `N × C` matrix of class scores whose rows
//! sum to one. Binary models emit `(1 − p, p)`.

pub mod boosting;
pub mod forest;
pub mod linalg;
pub mod logistic;
pub mod lssvm;
pub mod mlp;
pub mod scaling;
pub mod spec;

use std::path::Path;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub use boosting::BoostedTrees;
pub use forest::Forest;
pub use logistic::{LogReg, Multinomial};
pub use lssvm::LsSvm;
pub use mlp::Mlp;
pub use spec::{
    BaseLearner, BoostParams, Family, ForestParams, Hyperparams, LinearParams, LsSvmParams, MlpParams, ModelSpec,
};

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// How a fit terminated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub iterations: usize,
    pub cap: usize,
    pub converged: bool,
}

impl FitDiagnostics {
    /// A closed-form solve.
    pub fn direct() -> Self {
        Self {
            iterations: 1,
            cap: 1,
            converged: true,
        }
    }

    pub fn iterative(iterations: usize, cap: usize, converged: bool) -> Self {
        Self {
            iterations,
            cap,
            converged,
        }
    }

    fn merge(self, other: Self) -> Self {
        Self {
            iterations: self.iterations.max(other.iterations),
            cap: self.cap.max(other.cap),
            converged: self.converged && other.converged,
        }
    }
}

/// Learned parameters of one family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fitted {
    LsSvm(LsSvm),
    LogReg(LogReg),
    BoostedTree(BoostedTrees),
    DecisionForest(Forest),
    NeuralNet(Mlp),
    MultinomialLogReg(Multinomial),
    /// One binary model per class, class `i` positive.
    OneVsAll(Vec<Fitted>),
}

impl Fitted {
    fn class_scores(&self, x: ArrayView2<'_, f64>, classes: usize) -> Array2<f64> {
        let binary = |p: Vec<f64>| {
            let mut out = Array2::zeros((p.len(), 2));
            for (i, p) in p.into_iter().enumerate() {
                out[[i, 0]] = 1.0 - p;
                out[[i, 1]] = p;
            }
            out
        };
        match self {
            Fitted::LsSvm(m) => binary(m.positive_scores(x)),
            Fitted::LogReg(m) => binary(m.positive_scores(x)),
            Fitted::BoostedTree(m) => binary(m.positive_scores(x)),
            Fitted::DecisionForest(m) => m.scores(x),
            Fitted::NeuralNet(m) => m.scores(x),
            Fitted::MultinomialLogReg(m) => m.scores(x),
            Fitted::OneVsAll(models) => {
                let mut out = Array2::zeros((x.nrows(), classes));
                for (c, model) in models.iter().enumerate() {
                    let positive = model.class_scores(x, 2);
                    out.column_mut(c).assign(&positive.column(1));
                }
                for mut row in out.rows_mut() {
                    let total = row.sum();
                    if total > 0.0 {
                        row.mapv_inplace(|v| v / total);
                    } else {
                        row.fill(1.0 / classes as f64);
                    }
                }
                out
            }
        }
    }
}

fn fit_family(
    family: Family,
    spec: &ModelSpec,
    x: ArrayView2<'_, f64>,
    labels: &[usize],
    classes: usize,
    seed: u64,
) -> Result<(Fitted, FitDiagnostics, Option<f64>)> {
    let p = &spec.params;
    Ok(match family {
        Family::LsSvm => {
            let fit = LsSvm::fit(x, labels, &LsSvmParams::from_map(p)?)?;
            (Fitted::LsSvm(fit.model), fit.diagnostics, Some(fit.residual))
        }
        Family::LogReg => {
            let (m, d) = LogReg::fit(x, labels, &LinearParams::from_map(p)?);
            (Fitted::LogReg(m), d, None)
        }
        Family::BoostedTree => {
            let (m, d) = BoostedTrees::fit(x, labels, &BoostParams::from_map(p)?);
            (Fitted::BoostedTree(m), d, None)
        }
        Family::DecisionForest => {
            let (m, d) = Forest::fit(x, labels, classes, &ForestParams::from_map(p)?, seed);
            (Fitted::DecisionForest(m), d, None)
        }
        Family::NeuralNet => {
            let (m, d) = Mlp::fit(x, labels, classes, &MlpParams::from_map(p)?, seed);
            (Fitted::NeuralNet(m), d, None)
        }
        Family::MultinomialLogReg => {
            let (m, d) = Multinomial::fit(x, labels, classes, &LinearParams::from_map(p)?);
            (Fitted::MultinomialLogReg(m), d, None)
        }
        Family::OneVsAll(base) => {
            let mut models = Vec::with_capacity(classes);
            let mut diagnostics: Option<FitDiagnostics> = None;
            let mut residual: Option<f64> = None;
            for c in 0..classes {
                // a class missing from a fold still gets an (all-negative) member
                let binary: Vec<usize> = labels.iter().map(|&l| usize::from(l == c)).collect();
                let (m, d, r) = fit_family(base.into(), spec, x, &binary, 2, seed.wrapping_add(c as u64))?;
                models.push(m);
                diagnostics = Some(diagnostics.map_or(d, |acc| acc.merge(d)));
                residual = match (residual, r) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    (a, b) => a.or(b),
                };
            }
            (
                Fitted::OneVsAll(models),
                diagnostics.expect("at least two classes"),
                residual,
            )
        }
    })
}

/// A fitted classifier together with the schema it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    pub fitted: Fitted,
    pub diagnostics: FitDiagnostics,
    /// LS-SVM only: backward error of the dual solve (worst over one-vs-all members).
    pub dual_residual: Option<f64>,
    pub train_accuracy: f64,
}

/// Fits `spec` on raw arrays; `labels` must be dense in `0..classes`.
pub fn fit_arrays(
    spec: &ModelSpec,
    x: ArrayView2<'_, f64>,
    labels: &[usize],
    feature_names: Vec<String>,
    class_names: Vec<String>,
) -> Result<TrainedModel> {
    spec.validate()?;
    let classes = class_names.len();
    if classes < 2 {
        return Err(Error::InvalidData("need at least two classes".into()));
    }
    if spec.family.is_binary_only() && classes != 2 {
        return Err(Error::InvalidParameter(format!(
            "{} is a binary classifier but the data has {classes} classes",
            spec.family
        )));
    }
    if x.nrows() == 0 || x.nrows() != labels.len() {
        return Err(Error::InvalidData(
            "training rows and labels must be nonempty and aligned".into(),
        ));
    }
    let (fitted, diagnostics, dual_residual) = fit_family(spec.family, spec, x, labels, classes, spec.seed)?;
    if !diagnostics.converged {
        log::debug!(
            "{} stopped after {} of {} iterations without converging",
            spec.family,
            diagnostics.iterations,
            diagnostics.cap
        );
    }
    let mut model = TrainedModel {
        spec: spec.clone(),
        feature_names,
        class_names,
        fitted,
        diagnostics,
        dual_residual,
        train_accuracy: 0.0,
    };
    let predicted = model.labels_from_scores(&model.scores_unchecked(x));
    let correct = predicted.iter().zip(labels).filter(|(a, b)| a == b).count();
    model.train_accuracy = correct as f64 / labels.len() as f64;
    Ok(model)
}

pub fn fit_model(spec: &ModelSpec, train: &Dataset) -> Result<TrainedModel> {
    fit_arrays(
        spec,
        train.features().view(),
        train.labels(),
        train.feature_names().to_vec(),
        train.class_names().to_vec(),
    )
}

/// One binary model of `base` per class.
pub fn fit_one_vs_all(base: BaseLearner, params: Hyperparams, seed: u64, train: &Dataset) -> Result<TrainedModel> {
    if let Some(c) = train.class_counts().iter().position(|&n| n == 0) {
        return Err(Error::InvalidData(format!(
            "class '{}' has no training samples",
            train.class_names()[c]
        )));
    }
    fit_model(&ModelSpec::new(Family::OneVsAll(base), params, seed), train)
}

impl TrainedModel {
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Class scores without the feature-name check.
    pub fn scores_unchecked(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        self.fitted.class_scores(x, self.n_classes())
    }

    pub fn predict_scores(&self, data: &Dataset) -> Result<Array2<f64>> {
        if data.feature_names() != self.feature_names.as_slice() {
            return Err(Error::SchemaMismatch(format!(
                "model expects features {:?}, data has {:?}",
                self.feature_names,
                data.feature_names()
            )));
        }
        Ok(self.scores_unchecked(data.features().view()))
    }

    pub fn predict_labels(&self, data: &Dataset) -> Result<Vec<usize>> {
        Ok(self.labels_from_scores(&self.predict_scores(data)?))
    }

    /// Binary: positive iff `p ≥ 0.5`. Otherwise argmax, lowest index on ties.
    pub fn labels_from_scores(&self, scores: &Array2<f64>) -> Vec<usize> {
        labels_from_scores(scores)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

pub fn labels_from_scores(scores: &Array2<f64>) -> Vec<usize> {
    if scores.ncols() == 2 {
        return scores.column(1).iter().map(|&p| usize::from(p >= 0.5)).collect();
    }
    scores
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (i, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}
