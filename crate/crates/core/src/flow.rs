//! End-to-end flow: split, route, rank, select, reduce, decide, score.

use serde::Serialize;
use serde_json::json;

use crate::classifiers::{fit_model, Family, FitDiagnostics, ModelSpec, TrainedModel};
use crate::config::{Decision3Metric, FlowConfig, HierarchyLevel, HierarchySpec};
use crate::dataset::{stratified_split, Dataset, SplitPair};
use crate::error::{Error, Result, ResultExt, Stage};
use crate::metrics::{evaluate, randomized_recall, ClassMetrics, EvalMetrics};
use crate::ranking::{project_top_k, rank_features, RankedFeatures, RankingMethod};
use crate::selection::{
    dimensionality_sweep, make_interleaved_folds, make_positional_folds, spec_for_dimension, sweep_parameters,
    DimSweepResult, FoldPlan, GridProfile, SweepResult,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Binary,
    Multiclass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FinalRoute {
    Binary,
    MulticlassFlat,
    MulticlassHierarchical,
}

pub fn decision_route(data: &Dataset) -> Route {
    if data.n_classes() == 2 {
        Route::Binary
    } else {
        Route::Multiclass
    }
}

/// One recorded decision: what was compared and what was chosen.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrailEntry {
    pub stage: Stage,
    pub task: String,
    pub decision: String,
    pub inputs: serde_json::Value,
    pub outcome: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeaderboardEntry {
    pub family: Family,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl LeaderboardEntry {
    pub fn cv_accuracy(&self) -> Option<f64> {
        self.sweep.as_ref().map(|s| s.cv_accuracy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Leaderboard {
    pub entries: Vec<LeaderboardEntry>,
    pub winner: usize,
}

impl Leaderboard {
    pub fn winner(&self) -> &SweepResult {
        self.entries[self.winner].sweep.as_ref().expect("winner has a sweep")
    }
}

fn rounded(acc: f64) -> i64 {
    (acc * 1e4).round() as i64
}

/// Index of the winning entry: highest CV accuracy; entries equal to four
/// decimals go to the simpler family, then to the higher raw accuracy, then
/// to the earlier candidate.
pub fn pick_winner(entries: &[LeaderboardEntry]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, e) in entries.iter().enumerate() {
        let Some(acc) = e.cv_accuracy() else { continue };
        let better = match best {
            None => true,
            Some(b) => {
                let b_acc = entries[b].cv_accuracy().expect("scored");
                let (r, rb) = (rounded(acc), rounded(b_acc));
                if r != rb {
                    r > rb
                } else if e.family.complexity() != entries[b].family.complexity() {
                    e.family.complexity() < entries[b].family.complexity()
                } else {
                    acc > b_acc
                }
            }
        };
        if better {
            best = Some(i);
        }
    }
    best
}

/// Sweeps every candidate and picks the winner.
pub fn select_best_model(
    candidates: &[Family],
    train: &Dataset,
    folds: &FoldPlan,
    config: &FlowConfig,
) -> Result<Leaderboard> {
    if candidates.is_empty() {
        return Err(Error::InvalidParameter("no candidate families".into()));
    }
    let d = train.n_features();
    let entries: Vec<LeaderboardEntry> = candidates
        .iter()
        .map(
            |&family| match sweep_parameters(family, &config.grid_for(family, d), train, folds, config.seed) {
                Ok(sweep) => LeaderboardEntry {
                    family,
                    sweep: Some(sweep),
                    failure: None,
                },
                Err(e) => {
                    log::warn!("{family} could not be swept: {e}");
                    LeaderboardEntry {
                        family,
                        sweep: None,
                        failure: Some(e.to_string()),
                    }
                }
            },
        )
        .collect();
    let winner = pick_winner(&entries)
        .ok_or_else(|| Error::Numerical(format!("all {} candidate families failed to fit", candidates.len())))?;
    Ok(Leaderboard { entries, winner })
}

/// Result of the full binary or flat pipeline on one task.
#[derive(Debug, Clone, Serialize)]
pub struct TaskReport {
    pub name: String,
    pub class_names: Vec<String>,
    pub train_size: usize,
    pub test_size: usize,
    pub train_class_counts: Vec<usize>,
    pub rankings: Vec<RankedFeatures>,
    pub leaderboard: Leaderboard,
    pub dimensionality: DimSweepResult,
    /// Winning spec as refitted on the selected features.
    pub final_spec: ModelSpec,
    pub selected_method: RankingMethod,
    pub selected_features: Vec<String>,
    pub fit_diagnostics: FitDiagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dual_residual: Option<f64>,
    pub test_metrics: EvalMetrics,
    #[serde(skip)]
    pub model: TrainedModel,
}

impl TaskReport {
    /// Headline score: positive-class metrics for binary tasks, macro
    /// metrics otherwise.
    pub fn summary(&self) -> ClassMetrics {
        if self.class_names.len() == 2 {
            self.test_metrics.per_class[1]
        } else {
            self.test_metrics.macro_
        }
    }

    pub fn test_accuracy(&self) -> f64 {
        self.test_metrics.overall_accuracy
    }
}

fn candidates_for(route: Route, config: &FlowConfig) -> Result<Vec<Family>> {
    let defaults: &[Family] = match route {
        Route::Binary => &Family::BINARY_CANDIDATES,
        Route::Multiclass => &Family::MULTICLASS_CANDIDATES,
    };
    match &config.families {
        None => Ok(defaults.to_vec()),
        Some(list) => {
            let usable: Vec<Family> = list
                .iter()
                .copied()
                .filter(|f| route == Route::Binary || !f.is_binary_only())
                .collect();
            if usable.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "none of the requested families {:?} handles a {route:?} task",
                    list.iter().map(|f| f.name()).collect::<Vec<_>>()
                )));
            }
            Ok(usable)
        }
    }
}

fn fold_plan(train: &Dataset, config: &FlowConfig) -> Result<FoldPlan> {
    if config.folds_positional {
        make_positional_folds(train.n_samples(), config.fold_count)
    } else {
        make_interleaved_folds(train, config.fold_count, config.seed)
    }
}

/// Decision 2, the dimensionality sweep and test scoring for one task.
/// Everything before the final fit reads only `train`.
pub fn run_task(
    name: &str,
    train: &Dataset,
    test: &Dataset,
    config: &FlowConfig,
    trail: &mut Vec<TrailEntry>,
) -> Result<TaskReport> {
    let route = decision_route(train);
    let candidates = candidates_for(route, config).at(Stage::ModelSelection)?;
    let folds = fold_plan(train, config).at(Stage::ModelSelection)?;

    let rankings: Vec<RankedFeatures> = config
        .rankers
        .iter()
        .map(|&m| rank_features(train, m, config.bin_count))
        .collect::<Result<_>>()
        .at(Stage::Ranking)?;
    trail.push(TrailEntry {
        stage: Stage::Ranking,
        task: name.into(),
        decision: "feature rankings".into(),
        inputs: json!(rankings
            .iter()
            .map(|r| (
                r.method.name(),
                r.order.iter().map(|&j| r.feature_names[j].clone()).collect::<Vec<_>>()
            ))
            .collect::<Vec<_>>()),
        outcome: format!("{} rankings on {} features", rankings.len(), train.n_features()),
    });

    let leaderboard = select_best_model(&candidates, train, &folds, config).at(Stage::ModelSelection)?;
    let winner = leaderboard.winner();
    trail.push(TrailEntry {
        stage: Stage::ModelSelection,
        task: name.into(),
        decision: "decision 2: best model family".into(),
        inputs: json!(leaderboard
            .entries
            .iter()
            .map(|e| json!({
                "family": e.family.name(),
                "cv_accuracy": e.cv_accuracy(),
                "params": e.sweep.as_ref().map(|s| &s.best_spec.params),
                "failure": e.failure,
            }))
            .collect::<Vec<_>>()),
        outcome: format!("{} at CV accuracy {:.4}", winner.best_spec, winner.cv_accuracy),
    });

    let dimensionality =
        dimensionality_sweep(&winner.best_spec, train, &folds, &rankings).at(Stage::DimensionalitySweep)?;
    let ranking = rankings
        .iter()
        .find(|r| r.method == dimensionality.best_method)
        .expect("best method comes from the rankings");
    let k = dimensionality.best_k;
    trail.push(TrailEntry {
        stage: Stage::DimensionalitySweep,
        task: name.into(),
        decision: "feature subset".into(),
        inputs: json!(dimensionality
            .curves
            .iter()
            .map(|c| json!({"method": c.method.name(), "cv_accuracy": c.accuracies}))
            .collect::<Vec<_>>()),
        outcome: format!(
            "top {k} of {} by {} at CV accuracy {:.4}",
            train.n_features(),
            dimensionality.best_method,
            dimensionality.best_accuracy
        ),
    });

    let final_spec = spec_for_dimension(&winner.best_spec, train.n_features(), k);
    let reduced_train = project_top_k(train, ranking, k).at(Stage::FinalScoring)?;
    let reduced_test = project_top_k(test, ranking, k).at(Stage::FinalScoring)?;
    let model = fit_model(&final_spec, &reduced_train).at(Stage::FinalScoring)?;
    let scores = model.predict_scores(&reduced_test).at(Stage::FinalScoring)?;
    let predicted = model.labels_from_scores(&scores);
    let positive: Option<Vec<f64>> = (scores.ncols() == 2).then(|| scores.column(1).to_vec());
    let test_metrics =
        evaluate(test.labels(), &predicted, train.n_classes(), positive.as_deref()).at(Stage::FinalScoring)?;
    trail.push(TrailEntry {
        stage: Stage::FinalScoring,
        task: name.into(),
        decision: "test-set evaluation".into(),
        inputs: json!({"spec": final_spec.to_string(), "test_size": test.n_samples()}),
        outcome: format!(
            "accuracy {:.4}, macro recall {:.4}{}",
            test_metrics.overall_accuracy,
            test_metrics.macro_.recall,
            test_metrics.auc().map_or(String::new(), |a| format!(", AUC {a:.4}"))
        ),
    });

    Ok(TaskReport {
        name: name.into(),
        class_names: train.class_names().to_vec(),
        train_size: train.n_samples(),
        test_size: test.n_samples(),
        train_class_counts: train.class_counts(),
        selected_method: dimensionality.best_method,
        selected_features: ranking
            .top_k(k)
            .iter()
            .map(|&j| train.feature_names()[j].clone())
            .collect(),
        fit_diagnostics: model.diagnostics,
        dual_residual: model.dual_residual,
        rankings,
        leaderboard,
        dimensionality,
        final_spec,
        test_metrics,
        model,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelReport {
    pub level: HierarchyLevel,
    pub task: TaskReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct HierarchyReport {
    pub levels: Vec<LevelReport>,
    /// Unweighted mean of the per-level positive-class metrics.
    pub combined: ClassMetrics,
}

/// Unweighted mean of per-level precision, recall and accuracy.
pub fn combine_levels(levels: &[ClassMetrics]) -> ClassMetrics {
    let n = levels.len() as f64;
    ClassMetrics {
        precision: levels.iter().map(|m| m.precision).sum::<f64>() / n,
        recall: levels.iter().map(|m| m.recall).sum::<f64>() / n,
        accuracy: levels.iter().map(|m| m.accuracy).sum::<f64>() / n,
        precision_undefined: levels.iter().any(|m| m.precision_undefined),
        recall_undefined: levels.iter().any(|m| m.recall_undefined),
    }
}

/// Rows of `data` whose class is in either side of `level`, relabelled so
/// the positive side is class 1.
pub fn level_subset(data: &Dataset, level: &HierarchyLevel) -> Result<Dataset> {
    let rows: Vec<usize> = (0..data.n_samples())
        .filter(|&r| {
            let l = data.labels()[r];
            level.positive.contains(&l) || level.negative.contains(&l)
        })
        .collect();
    let subset = data.select_rows(&rows);
    let labels: Vec<usize> = subset
        .labels()
        .iter()
        .map(|l| usize::from(level.positive.contains(l)))
        .collect();
    let name = |side: &[usize]| {
        side.iter()
            .map(|&c| data.class_names()[c].clone())
            .collect::<Vec<_>>()
            .join("+")
    };
    let positives = labels.iter().filter(|&&l| l == 1).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::InvalidData(format!(
            "hierarchy level '{}' has an empty side in {} rows",
            level.name,
            data.n_samples()
        )));
    }
    subset.relabel(labels, vec![name(&level.negative), name(&level.positive)])
}

/// Runs the binary pipeline independently on every level.
pub fn evaluate_hierarchy(
    spec: &HierarchySpec,
    split: &SplitPair,
    config: &FlowConfig,
    trail: &mut Vec<TrailEntry>,
) -> Result<HierarchyReport> {
    spec.validate(split.train.n_classes()).at(Stage::Hierarchy)?;
    let mut levels = Vec::with_capacity(spec.levels.len());
    for level in &spec.levels {
        let train = level_subset(&split.train, level).at(Stage::Hierarchy)?;
        let test = level_subset(&split.test, level).at(Stage::Hierarchy)?;
        let task = run_task(&level.name, &train, &test, config, trail)?;
        levels.push(LevelReport {
            level: level.clone(),
            task,
        });
    }
    let per_level: Vec<ClassMetrics> = levels.iter().map(|l| l.task.summary()).collect();
    Ok(HierarchyReport {
        levels,
        combined: combine_levels(&per_level),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decision3 {
    pub metric: Decision3Metric,
    pub flat: f64,
    pub baseline: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hierarchical: Option<f64>,
    pub chosen: FinalRoute,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub advisory: Option<String>,
}

fn decision_value(metrics: &ClassMetrics, overall_accuracy: f64, metric: Decision3Metric) -> f64 {
    match metric {
        Decision3Metric::Recall => metrics.recall,
        Decision3Metric::Accuracy => overall_accuracy,
    }
}

/// Flat wins when it reaches the baseline; otherwise the hierarchy (when
/// given) wins if it scores strictly higher than flat.
pub fn decision_hierarchy(flat: f64, baseline: f64, hierarchical: Option<f64>, metric: Decision3Metric) -> Decision3 {
    let (chosen, advisory) = if flat >= baseline {
        (FinalRoute::MulticlassFlat, None)
    } else {
        match hierarchical {
            Some(h) if h > flat => (FinalRoute::MulticlassHierarchical, None),
            Some(_) => (FinalRoute::MulticlassFlat, None),
            None => (FinalRoute::MulticlassFlat, Some("hierarchy recommended".to_string())),
        }
    };
    Decision3 {
        metric,
        flat,
        baseline,
        hierarchical,
        chosen,
        advisory,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SplitSummary {
    pub seed: u64,
    pub train_fraction: f64,
    pub train_size: usize,
    pub test_size: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationCaps {
    pub logreg: usize,
    pub multinomial_logreg: usize,
    pub neural_net_epochs: usize,
    pub gradient_tolerance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowReport {
    pub source_id: String,
    pub n_samples: usize,
    pub n_features: usize,
    pub class_names: Vec<String>,
    pub class_counts: Vec<usize>,
    pub config: FlowConfig,
    pub grid_profile: GridProfile,
    pub iteration_caps: IterationCaps,
    pub split: SplitSummary,
    pub route: FinalRoute,
    /// The binary task, or the flat multi-class task.
    pub primary: TaskReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub randomized_baseline: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decision3: Option<Decision3>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hierarchy: Option<HierarchyReport>,
    pub trail: Vec<TrailEntry>,
}

impl FlowReport {
    /// Metrics of the route that was finally chosen.
    pub fn chosen_metrics(&self) -> ClassMetrics {
        match (&self.route, &self.hierarchy) {
            (FinalRoute::MulticlassHierarchical, Some(h)) => h.combined,
            _ => self.primary.summary(),
        }
    }

    /// Every trained model in the report, named by task.
    pub fn models(&self) -> Vec<(&str, &TrainedModel)> {
        let mut out = vec![(self.primary.name.as_str(), &self.primary.model)];
        if let Some(h) = &self.hierarchy {
            out.extend(h.levels.iter().map(|l| (l.task.name.as_str(), &l.task.model)));
        }
        out
    }
}

pub fn run_flow(data: &Dataset, config: &FlowConfig) -> Result<FlowReport> {
    config.validate()?;
    let split = stratified_split(data, config.train_fraction, config.seed).at(Stage::Split)?;
    run_flow_on_split(data, &split, config)
}

/// The flow on a given split; `data` supplies the class counts for the
/// baseline.
pub fn run_flow_on_split(data: &Dataset, split: &SplitPair, config: &FlowConfig) -> Result<FlowReport> {
    let mut trail = vec![TrailEntry {
        stage: Stage::Split,
        task: data.source_id().into(),
        decision: "stratified split".into(),
        inputs: json!({"seed": split.seed, "train_fraction": split.train_fraction}),
        outcome: format!("{} train / {} test", split.train.n_samples(), split.test.n_samples()),
    }];
    let route = decision_route(data);
    trail.push(TrailEntry {
        stage: Stage::Route,
        task: data.source_id().into(),
        decision: "decision 1: route".into(),
        inputs: json!({"classes": data.n_classes()}),
        outcome: format!("{route:?}").to_lowercase(),
    });
    if let Some(h) = &config.hierarchy {
        h.validate(data.n_classes()).at(Stage::Hierarchy)?;
    }

    let primary_name = match route {
        Route::Binary => "binary",
        Route::Multiclass => "flat",
    };
    let primary = run_task(primary_name, &split.train, &split.test, config, &mut trail)?;

    let (final_route, baseline, decision3, hierarchy) = match route {
        Route::Binary => (FinalRoute::Binary, None, None, None),
        Route::Multiclass => {
            let baseline = randomized_recall(&data.class_counts()).at(Stage::Hierarchy)?;
            let metric = config.decision3_metric;
            let flat = decision_value(&primary.summary(), primary.test_accuracy(), metric);
            let hierarchy = match (&config.hierarchy, flat < baseline) {
                (Some(spec), true) => Some(evaluate_hierarchy(spec, split, config, &mut trail)?),
                _ => None,
            };
            let hierarchical = hierarchy.as_ref().map(|h| {
                let acc = h.combined.accuracy;
                decision_value(&h.combined, acc, metric)
            });
            let decision = decision_hierarchy(flat, baseline, hierarchical, metric);
            trail.push(TrailEntry {
                stage: Stage::Hierarchy,
                task: data.source_id().into(),
                decision: "decision 3: flat or hierarchical".into(),
                inputs: json!({
                    "metric": metric,
                    "flat": flat,
                    "baseline": baseline,
                    "hierarchical": hierarchical,
                }),
                outcome: format!(
                    "{:?}{}",
                    decision.chosen,
                    decision
                        .advisory
                        .as_deref()
                        .map_or(String::new(), |a| format!(" ({a})"))
                ),
            });
            let chosen = decision.chosen;
            (chosen, Some(baseline), Some(decision), hierarchy)
        }
    };

    Ok(FlowReport {
        source_id: data.source_id().into(),
        n_samples: data.n_samples(),
        n_features: data.n_features(),
        class_names: data.class_names().to_vec(),
        class_counts: data.class_counts(),
        config: config.clone(),
        grid_profile: config.grid_profile,
        iteration_caps: IterationCaps {
            logreg: crate::classifiers::spec::LOGREG_MAX_ITERATIONS,
            multinomial_logreg: crate::classifiers::spec::MULTINOMIAL_MAX_ITERATIONS,
            neural_net_epochs: crate::classifiers::spec::MLP_MAX_EPOCHS,
            gradient_tolerance: crate::classifiers::logistic::GRADIENT_TOLERANCE,
        },
        split: SplitSummary {
            seed: split.seed,
            train_fraction: split.train_fraction,
            train_size: split.train.n_samples(),
            test_size: split.test.n_samples(),
            warnings: split.warnings.clone(),
        },
        route: final_route,
        primary,
        randomized_baseline: baseline,
        decision3,
        hierarchy,
        trail,
    })
}
