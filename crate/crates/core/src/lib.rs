//! Generalized classification flow.
//!
//! Loads a labeled table, splits it 30/70 with stratification, ranks
//! features with filter statistics, sweeps a zoo of classifiers under
//! interleaved k-fold cross-validation, shrinks the feature set to the best
//! top-k prefix and, for multi-class data, decides between flat and
//! hierarchical binary classification against a majority-class baseline.

pub mod classifiers;
pub mod config;
pub mod dataset;
pub mod error;
pub mod flow;
pub mod hexfloat;
pub mod metrics;
pub mod ranking;
pub mod report;
pub mod selection;

pub use classifiers::{
    fit_model, fit_one_vs_all, BaseLearner, Family, FitDiagnostics, Fitted, Hyperparams, ModelSpec, TrainedModel,
};
pub use config::{Decision3Metric, FlowConfig, HierarchyLevel, HierarchySpec};
pub use dataset::{load_dataset, stratified_split, Dataset, LabelColumn, LoadOptions, NaPolicy, SplitPair};
pub use error::{Error, ErrorClass, Result, Stage};
pub use flow::{run_flow, FinalRoute, FlowReport, Route};
pub use metrics::{ClassMetrics, ConfusionCounts, EvalMetrics, RocCurve};
pub use ranking::{rank_features, RankedFeatures, RankingMethod};
pub use report::{emit_plots, emit_report, ReportHeader};
pub use selection::{FoldPlan, Grid, GridProfile};
