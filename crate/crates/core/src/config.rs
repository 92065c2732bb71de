use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::classifiers::Family;
use crate::dataset::{LoadOptions, NaPolicy};
use crate::error::{Error, Result};
use crate::ranking::{RankingMethod, DEFAULT_BIN_COUNT};
use crate::selection::{default_grid, Grid, GridProfile, DEFAULT_FOLD_COUNT};

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.30;
pub const DEFAULT_RANKERS: [RankingMethod; 3] = [
    RankingMethod::Fisher,
    RankingMethod::MutualInfo,
    RankingMethod::ChiSquared,
];

/// Metric compared against the majority-class baseline when choosing
/// between flat and hierarchical classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision3Metric {
    #[default]
    Recall,
    Accuracy,
}

impl std::str::FromStr for Decision3Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "recall" => Ok(Self::Recall),
            "accuracy" => Ok(Self::Accuracy),
            other => Err(Error::InvalidParameter(format!(
                "decision metric must be 'recall' or 'accuracy', got '{other}'"
            ))),
        }
    }
}

/// One binary task of a hierarchy: `positive` vs `negative` class ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchyLevel {
    pub name: String,
    pub positive: Vec<usize>,
    pub negative: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HierarchySpec {
    pub levels: Vec<HierarchyLevel>,
}

impl HierarchySpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::InvalidData(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self, classes: usize) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::InvalidData("hierarchy has no levels".into()));
        }
        for level in &self.levels {
            if level.positive.is_empty() || level.negative.is_empty() {
                return Err(Error::InvalidData(format!("level '{}' has an empty side", level.name)));
            }
            if let Some(&c) = level.positive.iter().chain(&level.negative).find(|&&c| c >= classes) {
                return Err(Error::InvalidData(format!(
                    "level '{}' names class {c} but the data has {classes} classes",
                    level.name
                )));
            }
            if level.positive.iter().any(|c| level.negative.contains(c)) {
                return Err(Error::InvalidData(format!(
                    "level '{}' puts a class on both sides",
                    level.name
                )));
            }
        }
        Ok(())
    }
}

/// Fully resolved run settings; embedded in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub data_path: Option<PathBuf>,
    pub load: Option<LoadOptions>,
    pub train_fraction: f64,
    pub fold_count: usize,
    pub seed: u64,
    /// `None` means every family applicable to the route.
    pub families: Option<Vec<Family>>,
    /// Per-family grid overrides keyed by family name.
    pub grids: BTreeMap<String, Grid>,
    pub grid_profile: GridProfile,
    pub rankers: Vec<RankingMethod>,
    pub bin_count: usize,
    pub hierarchy: Option<HierarchySpec>,
    pub decision3_metric: Decision3Metric,
    pub out_dir: Option<PathBuf>,
    pub folds_positional: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            data_path: None,
            load: None,
            train_fraction: DEFAULT_TRAIN_FRACTION,
            fold_count: DEFAULT_FOLD_COUNT,
            seed: 0,
            families: None,
            grids: BTreeMap::new(),
            grid_profile: GridProfile::Full,
            rankers: DEFAULT_RANKERS.to_vec(),
            bin_count: DEFAULT_BIN_COUNT,
            hierarchy: None,
            decision3_metric: Decision3Metric::Recall,
            out_dir: None,
            folds_positional: false,
        }
    }
}

impl FlowConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    /// Grid for `family` on data with `d` features: an override if present,
    /// else the default for the profile.
    pub fn grid_for(&self, family: Family, d: usize) -> Grid {
        self.grids
            .get(&family.name())
            .cloned()
            .unwrap_or_else(|| default_grid(family, d, self.grid_profile))
    }

    pub fn na_policy(&self) -> NaPolicy {
        self.load.as_ref().map_or(NaPolicy::Fail, |l| l.na_policy)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "train fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if self.fold_count < 2 {
            return Err(Error::InvalidParameter("fold count must be at least 2".into()));
        }
        if self.rankers.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one ranking method is required".into(),
            ));
        }
        if self.bin_count < 2 {
            return Err(Error::InvalidParameter("bin count must be at least 2".into()));
        }
        if matches!(&self.families, Some(f) if f.is_empty()) {
            return Err(Error::InvalidParameter("candidate family list is empty".into()));
        }
        for name in self.grids.keys() {
            name.parse::<Family>()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = FlowConfig::default();
        assert_eq!(c.train_fraction, 0.30);
        assert_eq!(c.fold_count, 5);
        assert_eq!(c.rankers.len(), 3);
        assert_eq!(c.bin_count, 10);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn hierarchy_file_format() {
        let spec = HierarchySpec::from_json(
            r#"[{"name": "bright vs red", "positive": [0, 1, 2], "negative": [3, 4, 5]},
                {"name": "l2", "positive": [0], "negative": [1, 2]}]"#,
        )
        .unwrap();
        assert_eq!(spec.levels.len(), 2);
        assert!(spec.validate(6).is_ok());
        assert!(spec.validate(5).is_err());
        let overlap = HierarchySpec::from_json(r#"[{"name": "x", "positive": [0, 1], "negative": [1]}]"#).unwrap();
        assert!(overlap.validate(3).is_err());
    }
}
