//! Interleaved k-fold plans, hyperparameter grid sweeps and the top-k
//! dimensionality sweep.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{fit_arrays, labels_from_scores, Family, Hyperparams, ModelSpec};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::ranking::{RankedFeatures, RankingMethod};

pub const DEFAULT_FOLD_COUNT: usize = 5;

/// Validation-fold id for every training row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub fold_count: usize,
    pub assignments: Vec<usize>,
    /// `None` when folds follow the stored row order.
    pub shuffle_seed: Option<u64>,
}

impl FoldPlan {
    pub fn validation_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&r| self.assignments[r] == fold)
            .collect()
    }

    pub fn training_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&r| self.assignments[r] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.fold_count];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

fn check_fold_count(n: usize, fold_count: usize) -> Result<()> {
    if fold_count < 2 {
        return Err(Error::InvalidParameter(format!(
            "fold count must be at least 2, got {fold_count}"
        )));
    }
    if fold_count > n {
        return Err(Error::InvalidParameter(format!(
            "fold count {fold_count} exceeds the {n} training rows"
        )));
    }
    Ok(())
}

/// Row at position `j` of the stored order goes to fold `j mod fold_count`.
pub fn make_positional_folds(n: usize, fold_count: usize) -> Result<FoldPlan> {
    check_fold_count(n, fold_count)?;
    Ok(FoldPlan {
        fold_count,
        assignments: (0..n).map(|j| j % fold_count).collect(),
        shuffle_seed: None,
    })
}

/// Shuffles row order once, then assigns position `j` to fold `j mod fold_count`.
pub fn make_interleaved_folds(train: &Dataset, fold_count: usize, seed: u64) -> Result<FoldPlan> {
    let n = train.n_samples();
    check_fold_count(n, fold_count)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignments = vec![0; n];
    for (position, &row) in order.iter().enumerate() {
        assignments[row] = position % fold_count;
    }
    Ok(FoldPlan {
        fold_count,
        assignments,
        shuffle_seed: Some(seed),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub name: String,
    pub values: Vec<f64>,
}

/// Cartesian hyperparameter grid; the first axis varies slowest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Grid {
    pub axes: Vec<GridAxis>,
}

impl Grid {
    pub fn new(axes: &[(&str, &[f64])]) -> Self {
        Self {
            axes: axes
                .iter()
                .map(|(name, values)| GridAxis {
                    name: name.to_string(),
                    values: values.to_vec(),
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> Vec<Hyperparams> {
        let mut points = vec![Hyperparams::new()];
        for axis in &self.axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.values.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.insert(axis.name.clone(), v);
                        q
                    })
                })
                .collect();
        }
        points
    }
}

/// Which default grid to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridProfile {
    #[default]
    Full,
    /// One or two values per axis around the usual optima, for slow machines.
    Thin,
}

/// Default grid of `family` for data with `d` features.
pub fn default_grid(family: Family, d: usize, profile: GridProfile) -> Grid {
    let d = d.max(1) as f64;
    let full = profile == GridProfile::Full;
    match family.schema_family() {
        Family::BoostedTree if full => Grid::new(&[
            ("leaves", &[10.0, 20.0, 40.0]),
            ("learning_rate", &[0.04, 0.1, 0.2]),
            ("trees", &[50.0, 100.0, 200.0]),
        ]),
        Family::BoostedTree => Grid::new(&[("leaves", &[20.0]), ("learning_rate", &[0.1, 0.2]), ("trees", &[200.0])]),
        Family::LsSvm if full => Grid::new(&[
            ("lambda", &[1e-6, 1e-4, 1e-2]),
            ("kernel_gamma", &[0.1 / d, 1.0 / d, 10.0 / d]),
        ]),
        Family::LsSvm => Grid::new(&[("lambda", &[1e-6, 1e-2]), ("kernel_gamma", &[1.0 / d])]),
        Family::NeuralNet if full => {
            Grid::new(&[("learning_rate", &[0.01, 0.04, 0.1]), ("hidden_nodes", &[25.0, 100.0])])
        }
        Family::NeuralNet => Grid::new(&[("learning_rate", &[0.1]), ("hidden_nodes", &[25.0])]),
        Family::DecisionForest if full => Grid::new(&[
            ("split_count", &[128.0, 1024.0]),
            ("depth", &[16.0, 64.0]),
            ("ensemble_count", &[8.0, 32.0]),
        ]),
        Family::DecisionForest => Grid::new(&[
            ("split_count", &[128.0]),
            ("depth", &[16.0]),
            ("ensemble_count", &[8.0]),
        ]),
        _ => Grid::default(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub params: Hyperparams,
    pub mean_accuracy: f64,
    pub fold_accuracies: Vec<f64>,
    /// First fit error at this point; its folds score 0.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub best_spec: ModelSpec,
    pub cv_accuracy: f64,
    pub table: Vec<GridPoint>,
}

impl SweepResult {
    /// `params…,mean_cv_accuracy,fold_1…` rows in grid order.
    pub fn to_delimited(&self) -> String {
        let names: Vec<&String> = self
            .table
            .first()
            .map(|p| p.params.keys().collect())
            .unwrap_or_default();
        let folds = self.table.first().map_or(0, |p| p.fold_accuracies.len());
        let mut header: Vec<String> = names.iter().map(|n| n.to_string()).collect();
        header.push("mean_cv_accuracy".into());
        header.extend((1..=folds).map(|f| format!("fold_{f}")));
        let mut out = header.join(",") + "\n";
        for p in &self.table {
            let mut row: Vec<String> = p.params.values().map(|v| v.to_string()).collect();
            row.push(p.mean_accuracy.to_string());
            row.extend(p.fold_accuracies.iter().map(|a| a.to_string()));
            out.push_str(&(row.join(",") + "\n"));
        }
        out
    }
}

/// Accuracy on each validation fold for one model spec.
fn fold_accuracies(spec: &ModelSpec, train: &Dataset, folds: &FoldPlan) -> Vec<Result<f64>> {
    (0..folds.fold_count)
        .into_par_iter()
        .map(|f| fold_accuracy(spec, train, folds, f))
        .collect()
}

fn fold_accuracy(spec: &ModelSpec, train: &Dataset, folds: &FoldPlan, fold: usize) -> Result<f64> {
    let fit_rows = folds.training_rows(fold);
    let val_rows = folds.validation_rows(fold);
    let fit = train.select_rows(&fit_rows);
    let val = train.select_rows(&val_rows);
    let model = fit_arrays(
        spec,
        fit.features().view(),
        fit.labels(),
        train.feature_names().to_vec(),
        train.class_names().to_vec(),
    )?;
    let predicted = labels_from_scores(&model.scores_unchecked(val.features().view()));
    let correct = predicted.iter().zip(val.labels()).filter(|(a, b)| a == b).count();
    Ok(correct as f64 / val_rows.len() as f64)
}

fn score_point(params: Hyperparams, results: Vec<Result<f64>>) -> GridPoint {
    let mut failure = None;
    let fold_accuracies: Vec<f64> = results
        .into_iter()
        .map(|r| {
            r.unwrap_or_else(|e| {
                failure.get_or_insert_with(|| e.to_string());
                0.0
            })
        })
        .collect();
    let mean_accuracy = fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64;
    GridPoint {
        params,
        mean_accuracy,
        fold_accuracies,
        failure,
    }
}

/// Mean validation accuracy of every grid point; the first point with the
/// highest mean wins.
pub fn sweep_parameters(
    family: Family,
    grid: &Grid,
    train: &Dataset,
    folds: &FoldPlan,
    seed: u64,
) -> Result<SweepResult> {
    if folds.assignments.len() != train.n_samples() {
        return Err(Error::InvalidParameter(
            "fold plan does not match the training rows".into(),
        ));
    }
    let points = grid.points();
    if points.is_empty() {
        return Err(Error::InvalidParameter(format!("empty grid for {family}")));
    }
    for p in &points {
        ModelSpec::new(family, p.clone(), seed).validate()?;
    }
    let table: Vec<GridPoint> = points
        .into_par_iter()
        .map(|params| {
            let spec = ModelSpec::new(family, params.clone(), seed);
            let point = score_point(params, fold_accuracies(&spec, train, folds));
            if let Some(reason) = &point.failure {
                log::warn!("{spec}: {reason}");
            }
            point
        })
        .collect();
    let mut best = 0;
    for (i, p) in table.iter().enumerate() {
        if p.mean_accuracy > table[best].mean_accuracy {
            best = i;
        }
    }
    log::info!(
        "{family}: best of {} grid points {:?} at CV accuracy {:.4}",
        table.len(),
        table[best].params,
        table[best].mean_accuracy
    );
    Ok(SweepResult {
        best_spec: ModelSpec::new(family, table[best].params.clone(), seed),
        cv_accuracy: table[best].mean_accuracy,
        table,
    })
}

/// The spec to refit on a `k`-feature projection of `d`-feature data. An
/// explicit RBF width is kept as a multiple of `1/d`.
pub fn spec_for_dimension(spec: &ModelSpec, d: usize, k: usize) -> ModelSpec {
    let mut out = spec.clone();
    if spec.family.schema_family() == Family::LsSvm {
        if let Some(g) = out.params.get_mut("kernel_gamma") {
            *g = *g * d as f64 / k as f64;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimCurve {
    pub method: RankingMethod,
    /// Mean CV accuracy for `k = 1..=d`.
    pub accuracies: Vec<f64>,
    pub fold_accuracies: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimSweepResult {
    pub best_method: RankingMethod,
    pub best_k: usize,
    pub best_accuracy: f64,
    pub curves: Vec<DimCurve>,
}

impl DimSweepResult {
    /// `method,k,mean_cv_accuracy,fold_1…` rows.
    pub fn to_delimited(&self) -> String {
        let folds = self
            .curves
            .first()
            .and_then(|c| c.fold_accuracies.first())
            .map_or(0, |f| f.len());
        let mut header = vec!["method".to_string(), "k".into(), "mean_cv_accuracy".into()];
        header.extend((1..=folds).map(|f| format!("fold_{f}")));
        let mut out = header.join(",") + "\n";
        for c in &self.curves {
            for (i, (mean, per_fold)) in c.accuracies.iter().zip(&c.fold_accuracies).enumerate() {
                let mut row = vec![c.method.to_string(), (i + 1).to_string(), mean.to_string()];
                row.extend(per_fold.iter().map(|a| a.to_string()));
                out.push_str(&(row.join(",") + "\n"));
            }
        }
        out
    }
}

/// Refits `spec` on the top-k prefix of every ranking for `k = 1..=d`.
/// The best pair maximizes mean CV accuracy; ties go to the smaller `k`,
/// then to the earlier method in `fisher < mutual_info < chi_squared < mrmr`.
pub fn dimensionality_sweep(
    spec: &ModelSpec,
    train: &Dataset,
    folds: &FoldPlan,
    rankings: &[RankedFeatures],
) -> Result<DimSweepResult> {
    if rankings.is_empty() {
        return Err(Error::InvalidParameter("no feature rankings to sweep".into()));
    }
    let d = train.n_features();
    for r in rankings {
        if r.feature_names.as_slice() != train.feature_names() {
            return Err(Error::SchemaMismatch(format!(
                "{} ranking was computed on a different feature set",
                r.method
            )));
        }
    }
    let mut rankings: Vec<&RankedFeatures> = rankings.iter().collect();
    rankings.sort_by_key(|r| r.method);

    // identical ordered prefixes give identical fits, so each is evaluated once
    let mut jobs: BTreeMap<Vec<usize>, ()> = BTreeMap::new();
    for r in &rankings {
        for k in 1..=d {
            jobs.insert(r.order[..k].to_vec(), ());
        }
    }
    let prefixes: Vec<Vec<usize>> = jobs.into_keys().collect();
    let evaluated: Vec<(Vec<usize>, GridPoint)> = prefixes
        .into_par_iter()
        .map(|prefix| {
            let projected = train.select_columns(&prefix);
            let local = spec_for_dimension(spec, d, prefix.len());
            let point = score_point(local.params.clone(), fold_accuracies(&local, &projected, folds));
            (prefix, point)
        })
        .collect();
    let cache: HashMap<Vec<usize>, GridPoint> = evaluated.into_iter().collect();

    let curves: Vec<DimCurve> = rankings
        .iter()
        .map(|r| {
            let points: Vec<&GridPoint> = (1..=d).map(|k| &cache[&r.order[..k]]).collect();
            DimCurve {
                method: r.method,
                accuracies: points.iter().map(|p| p.mean_accuracy).collect(),
                fold_accuracies: points.iter().map(|p| p.fold_accuracies.clone()).collect(),
            }
        })
        .collect();
    let mut best = (curves[0].method, 1, curves[0].accuracies[0]);
    for k in 1..=d {
        for c in &curves {
            if c.accuracies[k - 1] > best.2 {
                best = (c.method, k, c.accuracies[k - 1]);
            }
        }
    }
    Ok(DimSweepResult {
        best_method: best.0,
        best_k: best.1,
        best_accuracy: best.2,
        curves,
    })
}
