//! Online classifiers behind a common predict/learn contract.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Label;

pub mod arf;
pub mod batch_forest;
pub mod hoeffding;
pub mod naive_bayes;

pub use arf::{AdaptiveRandomForest, ArfConfig, Bagging, FeatureSubset};
pub use batch_forest::{BatchForest, BatchForestConfig};
pub use hoeffding::{hoeffding_bound, HoeffdingConfig, HoeffdingTree};
pub use naive_bayes::GaussianNb;

/// A label together with the malicious score in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Label,
    pub score: f64,
}

impl Prediction {
    /// What every learner answers before it has seen any data.
    pub const UNTRAINED: Prediction = Prediction {
        label: Label::Benign,
        score: 0.5,
    };

    /// Label derived from the score, ties at 0.5 malicious.
    pub fn new(score: f64) -> Prediction {
        Prediction {
            label: Label::from_score(score),
            score,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LearnerError {
    #[error("ModelFrozen: the batch model does not accept further training")]
    ModelFrozen,
    #[error("SingleClassTrainingSet: training data must contain both classes")]
    SingleClassTrainingSet,
    #[error("TooFewSamples: need at least 2 training samples, got {0}")]
    TooFewSamples(usize),
    #[error("input contains non-finite values")]
    NonFiniteInput,
    #[error("expected {expected} features, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

pub(crate) fn check_input(x: &[f64], dims: Option<usize>) -> Result<(), LearnerError> {
    if let Some(expected) = dims {
        if x.len() != expected {
            return Err(LearnerError::DimensionMismatch {
                expected,
                found: x.len(),
            });
        }
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(LearnerError::NonFiniteInput);
    }
    Ok(())
}

/// Uniform contract shared by every model.
///
/// `predict` never mutates the model, and an untrained model answers
/// [`Prediction::UNTRAINED`].
pub trait Learner: Send {
    fn name(&self) -> &'static str;

    fn predict(&self, x: &[f64]) -> Prediction;

    fn learn(&mut self, x: &[f64], label: Label) -> Result<(), LearnerError>;

    /// Cumulative count of drift adaptations (replaced trees or subtrees).
    fn drift_count(&self) -> u64 {
        0
    }
}

impl<L: Learner + ?Sized> Learner for Box<L> {
    fn name(&self) -> &'static str {
        (**self).name()
    }

    fn predict(&self, x: &[f64]) -> Prediction {
        (**self).predict(x)
    }

    fn learn(&mut self, x: &[f64], label: Label) -> Result<(), LearnerError> {
        (**self).learn(x, label)
    }

    fn drift_count(&self) -> u64 {
        (**self).drift_count()
    }
}

/// Wraps a model so that `learn` is a no-op.
#[derive(Debug, Clone)]
pub struct Frozen<L>(pub L);

impl<L: Learner> Learner for Frozen<L> {
    fn name(&self) -> &'static str {
        self.0.name()
    }

    fn predict(&self, x: &[f64]) -> Prediction {
        self.0.predict(x)
    }

    fn learn(&mut self, _x: &[f64], _label: Label) -> Result<(), LearnerError> {
        Ok(())
    }
}

/// Any of the supported models, for configuration and snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[allow(clippy::large_enum_variant)]
pub enum Model {
    Nb(GaussianNb),
    Hat(HoeffdingTree),
    Arf(AdaptiveRandomForest),
    BatchRf(BatchForest),
}

impl Learner for Model {
    fn name(&self) -> &'static str {
        self.as_learner().name()
    }

    fn predict(&self, x: &[f64]) -> Prediction {
        self.as_learner().predict(x)
    }

    fn learn(&mut self, x: &[f64], label: Label) -> Result<(), LearnerError> {
        match self {
            Model::Nb(m) => m.learn(x, label),
            Model::Hat(m) => m.learn(x, label),
            Model::Arf(m) => m.learn(x, label),
            Model::BatchRf(m) => m.learn(x, label),
        }
    }

    fn drift_count(&self) -> u64 {
        self.as_learner().drift_count()
    }
}

impl Model {
    fn as_learner(&self) -> &dyn Learner {
        match self {
            Model::Nb(m) => m,
            Model::Hat(m) => m,
            Model::Arf(m) => m,
            Model::BatchRf(m) => m,
        }
    }
}

pub const SNAPSHOT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("unsupported snapshot format version {found} (expected {SNAPSHOT_FORMAT_VERSION})")]
    Version { found: u32 },
    #[error("malformed snapshot: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Serialize)]
struct SnapshotRef<'a> {
    format_version: u32,
    model: &'a Model,
}

#[derive(Deserialize)]
struct SnapshotHeader {
    format_version: u32,
}

#[derive(Deserialize)]
struct SnapshotOwned {
    model: Model,
}

/// Serializes a model to versioned JSON. Floats round-trip exactly.
pub fn save_snapshot(model: &Model) -> Result<String, SnapshotError> {
    Ok(serde_json::to_string(&SnapshotRef {
        format_version: SNAPSHOT_FORMAT_VERSION,
        model,
    })?)
}

pub fn load_snapshot(text: &str) -> Result<Model, SnapshotError> {
    let header: SnapshotHeader = serde_json::from_str(text)?;
    if header.format_version != SNAPSHOT_FORMAT_VERSION {
        return Err(SnapshotError::Version {
            found: header.format_version,
        });
    }
    let owned: SnapshotOwned = serde_json::from_str(text)?;
    Ok(owned.model)
}
