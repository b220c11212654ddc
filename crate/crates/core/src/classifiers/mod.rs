//! The six binary learners and the one-vs-rest multi-label wrapper.

pub mod knn;
pub mod linear;
pub mod mnb;
pub mod ovr;
pub mod tree;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::SparseVector;

pub use knn::{fit_knn, KnnModel, KnnParams, KnnTrainSet};
pub use linear::{fit_linear_svm, fit_logreg, LinearLoss, LinearModel, LinearParams};
pub use mnb::{fit_mnb, MnbModel, MnbParams};
pub use ovr::{decide, ovr_fit, MultiLabelModel, OvrOptions, Prediction};
pub use tree::{fit_gbrt, fit_random_forest, ForestModel, ForestParams, GbrtModel, GbrtParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Logreg,
    LinearSvm,
    Mnb,
    RandomForest,
    Gbrt,
    Knn,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Logreg,
        Algorithm::LinearSvm,
        Algorithm::Mnb,
        Algorithm::RandomForest,
        Algorithm::Gbrt,
        Algorithm::Knn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Logreg => "logreg",
            Algorithm::LinearSvm => "linear_svm",
            Algorithm::Mnb => "mnb",
            Algorithm::RandomForest => "random_forest",
            Algorithm::Gbrt => "gbrt",
            Algorithm::Knn => "knn",
        }
    }

    /// Score above which a label is assigned: probabilities and vote
    /// fractions use 0.5, SVM margins and MNB log-odds use 0.
    pub fn default_threshold(self) -> f64 {
        match self {
            Algorithm::LinearSvm | Algorithm::Mnb => 0.0,
            _ => 0.5,
        }
    }

    pub fn default_config(self) -> AlgorithmConfig {
        match self {
            Algorithm::Logreg => AlgorithmConfig::Logreg(LinearParams::default()),
            Algorithm::LinearSvm => AlgorithmConfig::LinearSvm(LinearParams {
                l2: 1e-3,
                lr: 4.0,
                ..LinearParams::default()
            }),
            Algorithm::Mnb => AlgorithmConfig::Mnb(MnbParams::default()),
            Algorithm::RandomForest => AlgorithmConfig::RandomForest(ForestParams::default()),
            Algorithm::Gbrt => AlgorithmConfig::Gbrt(GbrtParams::default()),
            Algorithm::Knn => AlgorithmConfig::Knn(KnnParams::default()),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown algorithm {s:?}")))
    }
}

/// An algorithm together with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum AlgorithmConfig {
    Logreg(LinearParams),
    LinearSvm(LinearParams),
    Mnb(MnbParams),
    RandomForest(ForestParams),
    Gbrt(GbrtParams),
    Knn(KnnParams),
}

impl AlgorithmConfig {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            AlgorithmConfig::Logreg(_) => Algorithm::Logreg,
            AlgorithmConfig::LinearSvm(_) => Algorithm::LinearSvm,
            AlgorithmConfig::Mnb(_) => Algorithm::Mnb,
            AlgorithmConfig::RandomForest(_) => Algorithm::RandomForest,
            AlgorithmConfig::Gbrt(_) => Algorithm::Gbrt,
            AlgorithmConfig::Knn(_) => Algorithm::Knn,
        }
    }

    /// Returns a copy with one named hyperparameter replaced.
    pub fn with_param(&self, name: &str, value: f64) -> Result<AlgorithmConfig> {
        let mut c = self.clone();
        let count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::InvalidParameter(format!("{name} must be a whole number, got {v}")))
            }
        };
        let unknown = || Error::InvalidParameter(format!("{} has no hyperparameter {name:?}", self.algorithm()));
        match &mut c {
            AlgorithmConfig::Logreg(p) | AlgorithmConfig::LinearSvm(p) => match name {
                "l2" => p.l2 = value,
                "lr" => p.lr = value,
                "epochs" => p.epochs = count(value)?,
                "batch_size" => p.batch_size = count(value)?,
                "decay" => p.decay = value,
                _ => return Err(unknown()),
            },
            AlgorithmConfig::Mnb(p) => match name {
                "alpha" => p.alpha = value,
                _ => return Err(unknown()),
            },
            AlgorithmConfig::RandomForest(p) => match name {
                "n_trees" => p.n_trees = count(value)?,
                "max_depth" => p.max_depth = count(value)?,
                "min_leaf" => p.min_leaf = count(value)?,
                "feature_subsample" => p.feature_subsample = value,
                "feature_pool" => p.feature_pool = count(value)?,
                _ => return Err(unknown()),
            },
            AlgorithmConfig::Gbrt(p) => match name {
                "n_rounds" => p.n_rounds = count(value)?,
                "max_depth" => p.max_depth = count(value)?,
                "shrinkage" => p.shrinkage = value,
                "min_leaf" => p.min_leaf = count(value)?,
                "feature_pool" => p.feature_pool = count(value)?,
                _ => return Err(unknown()),
            },
            AlgorithmConfig::Knn(p) => match name {
                "k" => p.k = count(value)?,
                _ => return Err(unknown()),
            },
        }
        Ok(c)
    }

    pub fn with_seed(&self, seed: u64) -> AlgorithmConfig {
        let mut c = self.clone();
        match &mut c {
            AlgorithmConfig::Logreg(p) | AlgorithmConfig::LinearSvm(p) => p.seed = seed,
            AlgorithmConfig::RandomForest(p) => p.seed = seed,
            AlgorithmConfig::Gbrt(p) => p.seed = seed,
            AlgorithmConfig::Mnb(_) | AlgorithmConfig::Knn(_) => {}
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum BinaryModel {
    Logreg(LinearModel),
    LinearSvm(LinearModel),
    Mnb(MnbModel),
    RandomForest(ForestModel),
    Gbrt(GbrtModel),
    Knn(KnnModel),
}

impl BinaryModel {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            BinaryModel::Logreg(_) => Algorithm::Logreg,
            BinaryModel::LinearSvm(_) => Algorithm::LinearSvm,
            BinaryModel::Mnb(_) => Algorithm::Mnb,
            BinaryModel::RandomForest(_) => Algorithm::RandomForest,
            BinaryModel::Gbrt(_) => Algorithm::Gbrt,
            BinaryModel::Knn(_) => Algorithm::Knn,
        }
    }

    pub fn score(&self, x: &SparseVector) -> f64 {
        match self {
            BinaryModel::Logreg(m) | BinaryModel::LinearSvm(m) => m.score(x),
            BinaryModel::Mnb(m) => m.score(x),
            BinaryModel::RandomForest(m) => m.score(x),
            BinaryModel::Gbrt(m) => m.score(x),
            BinaryModel::Knn(m) => m.score(x),
        }
    }
}

pub fn fit_binary(config: &AlgorithmConfig, xs: &[SparseVector], ys: &[bool]) -> Result<BinaryModel> {
    Ok(match config {
        AlgorithmConfig::Logreg(p) => BinaryModel::Logreg(fit_logreg(xs, ys, p)?),
        AlgorithmConfig::LinearSvm(p) => BinaryModel::LinearSvm(fit_linear_svm(xs, ys, p)?),
        AlgorithmConfig::Mnb(p) => BinaryModel::Mnb(fit_mnb(xs, ys, p)?),
        AlgorithmConfig::RandomForest(p) => BinaryModel::RandomForest(fit_random_forest(xs, ys, p)?),
        AlgorithmConfig::Gbrt(p) => BinaryModel::Gbrt(fit_gbrt(xs, ys, p)?),
        AlgorithmConfig::Knn(p) => BinaryModel::Knn(fit_knn(xs, ys, p)?),
    })
}

/// Like [`fit_binary`], but kNN models reuse an existing training set.
pub(crate) fn fit_binary_shared(
    config: &AlgorithmConfig,
    xs: &[SparseVector],
    ys: &[bool],
    knn_train: Option<&Arc<KnnTrainSet>>,
) -> Result<BinaryModel> {
    match (config, knn_train) {
        (AlgorithmConfig::Knn(p), Some(train)) => Ok(BinaryModel::Knn(knn::fit_knn_shared(train.clone(), ys, p)?)),
        _ => fit_binary(config, xs, ys),
    }
}
