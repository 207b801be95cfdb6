//! Binary classifiers over sparse feature vectors.
//!
//! Class indices are `0` and `1`; index `1` is the positive class of the
//! linear model (decision value `>= 0`).

mod forest;
mod nb;
mod persist;
mod svm;

pub use forest::{predict_forest, train_forest, ForestModel, ForestParams, Node, Tree};
pub use nb::{predict_mnb, train_mnb, NbModel};
pub use persist::{load_model, save_model, ModelBundle, FORMAT_VERSION};
pub use svm::{
    predict_linear, train_lsvm, train_lsvm_observed, LinearModel, SvmParams, SvmState, SvmSummary,
};

use serde::{Deserialize, Serialize};

use crate::vectorize::SparseVector;
use crate::{Error, Result};

/// Training or evaluation data: sparse rows with class indices in `{0, 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Vec<SparseVector>,
    y: Vec<usize>,
    n_features: usize,
}

impl Dataset {
    pub fn new(x: Vec<SparseVector>, y: Vec<usize>, n_features: usize) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Data(format!(
                "{} feature rows but {} labels",
                x.len(),
                y.len()
            )));
        }
        if let Some(c) = y.iter().find(|&&c| c > 1) {
            return Err(Error::Data(format!("class index {c} outside {{0, 1}}")));
        }
        if let Some(row) = x
            .iter()
            .position(|v| v.max_index().is_some_and(|i| i >= n_features))
        {
            return Err(Error::Data(format!(
                "row {row} has a feature index beyond {n_features} features"
            )));
        }
        Ok(Dataset { x, y, n_features })
    }

    pub fn x(&self) -> &[SparseVector] {
        &self.x
    }

    pub fn y(&self) -> &[usize] {
        &self.y
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.y.iter().filter(|&&c| c == 1).count();
        [self.y.len() - ones, ones]
    }

    pub(crate) fn require_both_classes(&self) -> Result<()> {
        if self.class_counts().contains(&0) {
            return Err(Error::Training(
                "training data must contain both classes".into(),
            ));
        }
        Ok(())
    }
}

/// Classifier family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lsvm,
    Mnb,
    Merf,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Lsvm, ModelKind::Mnb, ModelKind::Merf];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Lsvm => "lsvm",
            ModelKind::Mnb => "mnb",
            ModelKind::Merf => "merf",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lsvm" => Ok(ModelKind::Lsvm),
            "mnb" => Ok(ModelKind::Mnb),
            "merf" => Ok(ModelKind::Merf),
            other => Err(Error::Config(format!("unknown model {other:?}"))),
        }
    }
}

/// Hyperparameters for every classifier family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    pub svm: SvmParams,
    pub nb_alpha: f64,
    pub forest: ForestParams,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            svm: SvmParams::default(),
            nb_alpha: 1.0,
            forest: ForestParams::default(),
        }
    }
}

/// Any trained classifier.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Linear(LinearModel),
    NaiveBayes(NbModel),
    Forest(ForestModel),
}

impl TrainedModel {
    pub fn train(kind: ModelKind, data: &Dataset, params: &ModelParams) -> Result<Self> {
        Ok(match kind {
            ModelKind::Lsvm => TrainedModel::Linear(train_lsvm(data, &params.svm)?),
            ModelKind::Mnb => TrainedModel::NaiveBayes(train_mnb(data, params.nb_alpha)?),
            ModelKind::Merf => TrainedModel::Forest(train_forest(data, &params.forest)?),
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Linear(_) => ModelKind::Lsvm,
            TrainedModel::NaiveBayes(_) => ModelKind::Mnb,
            TrainedModel::Forest(_) => ModelKind::Merf,
        }
    }

    /// Predicted class with a signed score favouring class 1: the SVM margin,
    /// the naive Bayes log-posterior difference, or the forest vote margin.
    pub fn predict(&self, x: &SparseVector) -> (usize, f64) {
        match self {
            TrainedModel::Linear(m) => predict_linear(m, x),
            TrainedModel::NaiveBayes(m) => {
                let [neg, pos] = m.log_posteriors(x);
                (predict_mnb(m, x), pos - neg)
            }
            TrainedModel::Forest(m) => {
                let votes = m.votes(x);
                (predict_forest(m, x), m.vote_margin(votes))
            }
        }
    }
}
