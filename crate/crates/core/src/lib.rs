//! Streaming anomaly detection for IoT network traffic.
//!
//! The crate covers the full pipeline used to compare batch and streaming
//! learners under concept drift:
//!
//! * [`packet`]: classic pcap and canonical packet CSV ingestion
//! * [`features`]: 1 ms windowed feature extraction and online min-max scaling
//! * [`drift`]: the ADWIN change detector
//! * [`learners`]: Gaussian naive Bayes, Hoeffding (adaptive) trees, adaptive
//!   random forest and a frozen batch random forest behind one [`Learner`] trait
//! * [`synth`]: four-phase drift stream construction and synthetic sample pools
//! * [`evaluate`]: prequential (test-then-train) evaluation, metrics, aggregation
//! * [`experiment`]: config-driven repeated runs and report tables
//!
//! Data-parallel sweeps (forest training, ensemble member updates, repetitions)
//! go through [`parallel::Execution`], which falls back to sequential execution
//! when the `parallel` feature is disabled.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub mod drift;
pub mod evaluate;
pub mod experiment;
pub mod features;
pub mod learners;
pub mod packet;
pub mod parallel;
pub mod synth;

pub use drift::Adwin;
pub use evaluate::{prequential_run, ConfusionCounts, RunResult};
pub use features::FeatureVector;
pub use learners::{Learner, Prediction};
pub use packet::PacketRecord;

/// Number of features produced per traffic window.
pub const NUM_FEATURES: usize = 25;

/// Binary traffic class. `Malicious` is the positive class everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Benign,
    Malicious,
}

impl Label {
    pub fn is_malicious(self) -> bool {
        self == Label::Malicious
    }

    /// Class index used by the learners: benign = 0, malicious = 1.
    pub fn index(self) -> usize {
        match self {
            Label::Benign => 0,
            Label::Malicious => 1,
        }
    }

    pub fn from_index(index: usize) -> Label {
        if index == 0 {
            Label::Benign
        } else {
            Label::Malicious
        }
    }

    /// Score-to-label rule shared by all learners: ties at 0.5 are malicious.
    pub fn from_score(score: f64) -> Label {
        if score >= 0.5 {
            Label::Malicious
        } else {
            Label::Benign
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Benign => "benign",
            Label::Malicious => "malicious",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown label `{0}`")]
pub struct ParseLabelError(pub String);

impl FromStr for Label {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "benign" => Ok(Label::Benign),
            "malicious" => Ok(Label::Malicious),
            other => Err(ParseLabelError(other.to_string())),
        }
    }
}
