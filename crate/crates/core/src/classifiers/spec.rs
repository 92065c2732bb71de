//! Classifier families, hyperparameter maps and their per-family schemas.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Binary-capable learners that can back a one-vs-all ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BaseLearner {
    LsSvm,
    LogReg,
    BoostedTree,
    DecisionForest,
    NeuralNet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    LsSvm,
    LogReg,
    BoostedTree,
    DecisionForest,
    NeuralNet,
    MultinomialLogReg,
    OneVsAll(BaseLearner),
}

impl From<BaseLearner> for Family {
    fn from(base: BaseLearner) -> Self {
        match base {
            BaseLearner::LsSvm => Family::LsSvm,
            BaseLearner::LogReg => Family::LogReg,
            BaseLearner::BoostedTree => Family::BoostedTree,
            BaseLearner::DecisionForest => Family::DecisionForest,
            BaseLearner::NeuralNet => Family::NeuralNet,
        }
    }
}

impl Family {
    pub const BINARY_CANDIDATES: [Family; 5] = [
        Family::LsSvm,
        Family::LogReg,
        Family::BoostedTree,
        Family::DecisionForest,
        Family::NeuralNet,
    ];

    pub const MULTICLASS_CANDIDATES: [Family; 5] = [
        Family::MultinomialLogReg,
        Family::NeuralNet,
        Family::DecisionForest,
        Family::OneVsAll(BaseLearner::BoostedTree),
        Family::OneVsAll(BaseLearner::LsSvm),
    ];

    /// Families that only handle two classes.
    pub fn is_binary_only(self) -> bool {
        matches!(self, Family::LsSvm | Family::LogReg | Family::BoostedTree)
    }

    /// Rank used to break near-ties in model selection; simpler models rank lower.
    pub fn complexity(self) -> u8 {
        match self {
            Family::LogReg | Family::MultinomialLogReg => 0,
            Family::LsSvm => 1,
            Family::DecisionForest => 2,
            Family::BoostedTree => 3,
            Family::NeuralNet => 4,
            Family::OneVsAll(base) => Family::from(base).complexity(),
        }
    }

    /// Family whose hyperparameter schema applies.
    pub fn schema_family(self) -> Family {
        match self {
            Family::OneVsAll(base) => base.into(),
            f => f,
        }
    }

    pub fn name(self) -> String {
        match self {
            Family::LsSvm => "lssvm".into(),
            Family::LogReg => "logreg".into(),
            Family::BoostedTree => "boosted_tree".into(),
            Family::DecisionForest => "decision_forest".into(),
            Family::NeuralNet => "neural_net".into(),
            Family::MultinomialLogReg => "multinomial_logreg".into(),
            Family::OneVsAll(BaseLearner::LsSvm) => "ova_svm".into(),
            Family::OneVsAll(base) => format!("ova_{}", Family::from(base).name()),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let base = |name: &str| -> Option<BaseLearner> {
            Some(match name {
                "lssvm" | "svm" => BaseLearner::LsSvm,
                "logreg" => BaseLearner::LogReg,
                "boosted_tree" => BaseLearner::BoostedTree,
                "decision_forest" => BaseLearner::DecisionForest,
                "neural_net" => BaseLearner::NeuralNet,
                _ => return None,
            })
        };
        if s == "multinomial_logreg" {
            return Ok(Family::MultinomialLogReg);
        }
        if let Some(rest) = s.strip_prefix("ova_") {
            if let Some(b) = base(rest) {
                return Ok(Family::OneVsAll(b));
            }
        } else if let Some(b) = base(s) {
            return Ok(b.into());
        }
        Err(Error::InvalidParameter(format!("unknown model family '{s}'")))
    }
}

impl Serialize for Family {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for Family {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Named hyperparameter values; integer-valued parameters are stored as whole reals.
pub type Hyperparams = BTreeMap<String, f64>;

/// A classifier family, its hyperparameters and the seed for any randomness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub params: Hyperparams,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(family: Family, params: Hyperparams, seed: u64) -> Self {
        Self { family, params, seed }
    }

    pub fn validate(&self) -> Result<()> {
        let schema = self.family.schema_family();
        match schema {
            Family::LsSvm => LsSvmParams::from_map(&self.params).map(drop),
            Family::LogReg | Family::MultinomialLogReg => LinearParams::from_map(&self.params).map(drop),
            Family::BoostedTree => BoostParams::from_map(&self.params).map(drop),
            Family::DecisionForest => ForestParams::from_map(&self.params).map(drop),
            Family::NeuralNet => MlpParams::from_map(&self.params).map(drop),
            Family::OneVsAll(_) => unreachable!("schema family is never one-vs-all"),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.family)?;
        if !self.params.is_empty() {
            let parts: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            write!(f, "({})", parts.join(", "))?;
        }
        Ok(())
    }
}

struct Reader<'a> {
    params: &'a Hyperparams,
    family: &'static str,
    known: &'static [&'static str],
}

impl<'a> Reader<'a> {
    fn new(params: &'a Hyperparams, family: &'static str, known: &'static [&'static str]) -> Result<Self> {
        if let Some(unknown) = params.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(Error::InvalidParameter(format!(
                "{family} has no hyperparameter '{unknown}' (expected one of {known:?})"
            )));
        }
        Ok(Self { params, family, known })
    }

    fn real(&self, name: &str, default: Option<f64>, positive: bool) -> Result<f64> {
        debug_assert!(self.known.contains(&name));
        let value = match (self.params.get(name), default) {
            (Some(&v), _) => v,
            (None, Some(d)) => d,
            (None, None) => {
                return Err(Error::InvalidParameter(format!(
                    "{} requires hyperparameter '{name}'",
                    self.family
                )))
            }
        };
        if !value.is_finite() || (positive && value <= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "{}: '{name}' must be {}, got {value}",
                self.family,
                if positive { "positive" } else { "finite" }
            )));
        }
        Ok(value)
    }

    fn integer(&self, name: &str, default: Option<usize>, min: usize) -> Result<usize> {
        let value = self.real(name, default.map(|d| d as f64), false)?;
        if value.fract() != 0.0 || value < min as f64 {
            return Err(Error::InvalidParameter(format!(
                "{}: '{name}' must be an integer >= {min}, got {value}",
                self.family
            )));
        }
        Ok(value as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsSvmParams {
    /// Diagonal regularizer added to the kernel matrix.
    pub lambda: f64,
    /// RBF width; `None` resolves to 1/d at fit time.
    pub kernel_gamma: Option<f64>,
}

impl LsSvmParams {
    pub fn from_map(params: &Hyperparams) -> Result<Self> {
        let r = Reader::new(params, "lssvm", &["lambda", "kernel_gamma"])?;
        let kernel_gamma = match params.get("kernel_gamma") {
            Some(_) => Some(r.real("kernel_gamma", None, true)?),
            None => None,
        };
        Ok(Self {
            lambda: r.real("lambda", Some(1e-6), true)?,
            kernel_gamma,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearParams {
    pub l2: f64,
    /// Overrides the family's iteration cap.
    pub max_iterations: Option<usize>,
}

pub const LINEAR_L2: f64 = 1e-6;
pub const LOGREG_MAX_ITERATIONS: usize = 100;
pub const MULTINOMIAL_MAX_ITERATIONS: usize = 1000;

impl LinearParams {
    pub fn from_map(params: &Hyperparams) -> Result<Self> {
        let r = Reader::new(params, "logistic regression", &["max_iterations"])?;
        Ok(Self {
            l2: LINEAR_L2,
            max_iterations: match params.get("max_iterations") {
                Some(_) => Some(r.integer("max_iterations", None, 1)?),
                None => None,
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostParams {
    pub leaves: usize,
    pub learning_rate: f64,
    pub trees: usize,
    pub min_leaf_samples: usize,
}

impl BoostParams {
    pub fn from_map(params: &Hyperparams) -> Result<Self> {
        let r = Reader::new(
            params,
            "boosted_tree",
            &["leaves", "learning_rate", "trees", "min_leaf_samples"],
        )?;
        Ok(Self {
            leaves: r.integer("leaves", Some(20), 2)?,
            learning_rate: r.real("learning_rate", Some(0.2), true)?,
            trees: r.integer("trees", Some(100), 1)?,
            min_leaf_samples: r.integer("min_leaf_samples", Some(2), 1)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub split_count: usize,
    pub depth: usize,
    pub ensemble_count: usize,
}

impl ForestParams {
    pub fn from_map(params: &Hyperparams) -> Result<Self> {
        let r = Reader::new(params, "decision_forest", &["split_count", "depth", "ensemble_count"])?;
        Ok(Self {
            split_count: r.integer("split_count", Some(128), 1)?,
            depth: r.integer("depth", Some(32), 1)?,
            ensemble_count: r.integer("ensemble_count", Some(8), 1)?,
        })
    }
}

pub const MLP_MAX_EPOCHS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlpParams {
    pub learning_rate: f64,
    pub hidden_nodes: usize,
    pub epochs: usize,
}

impl MlpParams {
    pub fn from_map(params: &Hyperparams) -> Result<Self> {
        let r = Reader::new(params, "neural_net", &["learning_rate", "hidden_nodes", "epochs"])?;
        Ok(Self {
            learning_rate: r.real("learning_rate", Some(0.1), true)?,
            hidden_nodes: r.integer("hidden_nodes", Some(25), 1)?,
            epochs: r.integer("epochs", Some(MLP_MAX_EPOCHS), 1)?,
        })
    }
}
