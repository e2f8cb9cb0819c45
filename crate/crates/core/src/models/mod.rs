//! Classifier families: class-weighted logistic regression, a Gini random
//! forest, and a dense 64/32/20/10/1 network with dropout.
//!
//! Every model predicts the probability of the defective class. The logistic
//! model and the network also expose exact input gradients, which is what
//! Integrated Gradients consumes.

mod forest;
mod logistic;
mod mlp;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

pub use forest::{DecisionTree, ForestModel, TreeNode, N_TREES};
pub use logistic::LogisticModel;
pub use mlp::{DenseLayer, MlpModel, HIDDEN_SIZES};

use crate::data::{ClassWeights, Standardizer};
use crate::{Error, Result};

/// Space in which a differentiable model's output is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputSpace {
    /// Sigmoid probability of the positive class.
    #[default]
    Probability,
    /// Pre-sigmoid score.
    Logit,
}

/// A fitted binary classifier.
pub trait Classifier: Send + Sync {
    fn kind(&self) -> ModelKind;

    fn n_features(&self) -> usize;

    /// Probability of class 1 for a single row. Callers guarantee the width.
    fn predict_row(&self, x: ArrayView1<'_, f64>) -> f64;

    /// Row-wise probability of class 1.
    fn predict_proba(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        check_width(self.n_features(), x.ncols())?;
        Ok(x.rows().into_iter().map(|r| self.predict_row(r)).collect())
    }

    fn as_differentiable(&self) -> Option<&dyn Differentiable> {
        None
    }
}

/// A classifier with an exact gradient of its output with respect to the input.
pub trait Differentiable: Classifier {
    fn output(&self, x: &[f64], space: OutputSpace) -> Result<f64>;

    fn input_gradient(&self, x: &[f64], space: OutputSpace) -> Result<Vec<f64>>;
}

pub(crate) fn check_width(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::WidthMismatch { expected, found });
    }
    Ok(())
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy evaluated from the logit, stable for large |z|.
#[inline]
pub(crate) fn bce_from_logit(z: f64, y: u8) -> f64 {
    z.max(0.0) - z * f64::from(y) + (-z.abs()).exp().ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Logistic,
    Forest,
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Logistic, ModelKind::Forest, ModelKind::Mlp];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Logistic => "logistic",
            ModelKind::Forest => "forest",
            ModelKind::Mlp => "mlp",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(ModelKind::Logistic),
            "forest" => Ok(ModelKind::Forest),
            "mlp" => Ok(ModelKind::Mlp),
            other => Err(Error::Config(format!(
                "unknown model kind `{other}` (expected logistic, forest or mlp)"
            ))),
        }
    }
}

/// Training hyperparameters shared by the three model families.
///
/// Missing fields in a JSON config fall back to the network defaults; use
/// [`TrainConfig::for_kind`] for per-family defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub seed: u64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub early_stop_patience: usize,
    pub l2_penalty: f64,
    pub dropout_rate: f64,
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            learning_rate: 1e-3,
            max_epochs: 200,
            batch_size: 32,
            early_stop_patience: 10,
            l2_penalty: 0.0,
            dropout_rate: 0.2,
            validation_fraction: 0.15,
        }
    }
}

impl TrainConfig {
    /// Full-batch gradient descent defaults: the learning rate is the initial
    /// step of a backtracking line search.
    pub fn logistic_default() -> Self {
        Self {
            learning_rate: 1.0,
            max_epochs: 1000,
            l2_penalty: 1e-4,
            dropout_rate: 0.0,
            validation_fraction: 0.0,
            ..Self::default()
        }
    }

    pub fn forest_default() -> Self {
        Self {
            dropout_rate: 0.0,
            validation_fraction: 0.0,
            ..Self::default()
        }
    }

    pub fn for_kind(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Logistic => Self::logistic_default(),
            ModelKind::Forest => Self::forest_default(),
            ModelKind::Mlp => Self::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        if !(0.0..=0.5).contains(&self.validation_fraction) {
            return bad(format!(
                "validation_fraction must lie in [0, 0.5], got {}",
                self.validation_fraction
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!("dropout_rate must lie in [0, 1), got {}", self.dropout_rate));
        }
        if !(self.l2_penalty >= 0.0 && self.l2_penalty.is_finite()) {
            return bad(format!("l2_penalty must be >= 0, got {}", self.l2_penalty));
        }
        Ok(())
    }
}

/// Any fitted model, tagged by family for persistence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AnyModel {
    Logistic(LogisticModel),
    Forest(ForestModel),
    Mlp(MlpModel),
}

impl AnyModel {
    fn inner(&self) -> &dyn Classifier {
        match self {
            AnyModel::Logistic(m) => m,
            AnyModel::Forest(m) => m,
            AnyModel::Mlp(m) => m,
        }
    }
}

impl Classifier for AnyModel {
    fn kind(&self) -> ModelKind {
        self.inner().kind()
    }

    fn n_features(&self) -> usize {
        self.inner().n_features()
    }

    fn predict_row(&self, x: ArrayView1<'_, f64>) -> f64 {
        self.inner().predict_row(x)
    }

    fn predict_proba(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        self.inner().predict_proba(x)
    }

    fn as_differentiable(&self) -> Option<&dyn Differentiable> {
        self.inner().as_differentiable()
    }
}

/// Fits a model of the requested family on standardized features.
pub fn fit_model(
    kind: ModelKind,
    x: &Array2<f64>,
    y: &[u8],
    weights: &ClassWeights,
    cfg: &TrainConfig,
) -> Result<AnyModel> {
    Ok(match kind {
        ModelKind::Logistic => AnyModel::Logistic(LogisticModel::fit(x, y, weights, cfg)?),
        ModelKind::Forest => AnyModel::Forest(ForestModel::fit(x, y, weights, cfg)?),
        ModelKind::Mlp => AnyModel::Mlp(MlpModel::fit(x, y, weights, cfg)?),
    })
}

pub(crate) fn check_training_inputs(x: &Array2<f64>, y: &[u8]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.nrows(),
            right: y.len(),
        });
    }
    if x.ncols() == 0 {
        return Err(Error::InvalidArgument("no features".into()));
    }
    let pos = y.iter().filter(|&&l| l == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::SingleClass);
    }
    Ok(())
}

pub const ARTIFACT_FORMAT_VERSION: u32 = 1;

/// A persisted model with everything needed to score raw rows again.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format_version: u32,
    /// Feature names the model was trained on, in column order.
    pub feature_names: Vec<String>,
    pub train_config: TrainConfig,
    pub class_weights: ClassWeights,
    /// Applied to raw rows before prediction, when present.
    pub standardizer: Option<Standardizer>,
    pub model: AnyModel,
}

impl ModelArtifact {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let artifact: Self = serde_json::from_str(text)?;
        if artifact.feature_names.len() != artifact.model.n_features() {
            return Err(Error::SchemaMismatch(format!(
                "artifact lists {} feature names for a {}-feature model",
                artifact.feature_names.len(),
                artifact.model.n_features()
            )));
        }
        Ok(artifact)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Fails unless `feature_names` matches the training schema exactly.
    pub fn check_schema(&self, feature_names: &[String]) -> Result<()> {
        if self.feature_names != feature_names {
            return Err(Error::SchemaMismatch(format!(
                "model trained on [{}], dataset has [{}]",
                self.feature_names.join(", "),
                feature_names.join(", ")
            )));
        }
        Ok(())
    }
}
