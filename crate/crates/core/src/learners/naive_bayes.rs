//! Incremental Gaussian naive Bayes.

use serde::{Deserialize, Serialize};

use super::{check_input, Learner, LearnerError, Prediction};
use crate::Label;

/// Welford running mean / population variance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Welford {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn variance(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.m2 / self.n as f64).max(0.0)
        }
    }
}

/// Variance smoothing: `VAR_FLOOR + VAR_RANGE_FRACTION * feature range`.
pub const VAR_FLOOR: f64 = 1e-9;
pub const VAR_RANGE_FRACTION: f64 = 1e-6;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    class_counts: [u64; 2],
    /// `stats[class][feature]`
    stats: [Vec<Welford>; 2],
    min: Vec<f64>,
    max: Vec<f64>,
}

impl GaussianNb {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn class_count(&self, label: Label) -> u64 {
        self.class_counts[label.index()]
    }

    pub fn feature_stats(&self, label: Label, feature: usize) -> Option<Welford> {
        self.stats[label.index()].get(feature).copied()
    }

    fn dims(&self) -> Option<usize> {
        (!self.min.is_empty()).then_some(self.min.len())
    }

    /// Variance smoothing term for one feature.
    pub fn smoothing(&self, feature: usize) -> f64 {
        VAR_FLOOR + VAR_RANGE_FRACTION * (self.max[feature] - self.min[feature])
    }

    /// Unnormalized per-class log posteriors (`log prior + log likelihood`).
    /// `None` for classes that were never observed.
    pub fn log_posteriors(&self, x: &[f64]) -> [Option<f64>; 2] {
        let total = (self.class_counts[0] + self.class_counts[1]) as f64;
        let mut out = [None, None];
        for (class, slot) in out.iter_mut().enumerate() {
            let count = self.class_counts[class];
            if count == 0 {
                continue;
            }
            let mut lp = (count as f64 / total).ln();
            for (f, (&xf, st)) in x.iter().zip(&self.stats[class]).enumerate() {
                let var = st.variance() + self.smoothing(f);
                let d = xf - st.mean;
                lp += -0.5 * (2.0 * std::f64::consts::PI * var).ln() - d * d / (2.0 * var);
            }
            *slot = Some(lp);
        }
        out
    }
}

impl Learner for GaussianNb {
    fn name(&self) -> &'static str {
        "nb"
    }

    fn predict(&self, x: &[f64]) -> Prediction {
        if self.dims() != Some(x.len()) {
            return Prediction::UNTRAINED;
        }
        match self.log_posteriors(x) {
            [None, None] => Prediction::UNTRAINED,
            [Some(_), None] => Prediction::new(0.0),
            [None, Some(_)] => Prediction::new(1.0),
            [Some(benign), Some(malicious)] => {
                // softmax over two classes, written to avoid overflow
                let score = 1.0 / (1.0 + (benign - malicious).exp());
                Prediction::new(score)
            }
        }
    }

    fn learn(&mut self, x: &[f64], label: Label) -> Result<(), LearnerError> {
        check_input(x, self.dims())?;
        if self.dims().is_none() {
            self.min = x.to_vec();
            self.max = x.to_vec();
            self.stats = [
                vec![Welford::default(); x.len()],
                vec![Welford::default(); x.len()],
            ];
        }
        for (f, &v) in x.iter().enumerate() {
            self.min[f] = self.min[f].min(v);
            self.max[f] = self.max[f].max(v);
        }
        let class = label.index();
        self.class_counts[class] += 1;
        for (st, &v) in self.stats[class].iter_mut().zip(x) {
            st.push(v);
        }
        Ok(())
    }
}
