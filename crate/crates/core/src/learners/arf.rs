//! Adaptive random forest: online bagging over Hoeffding trees with per-tree
//! warning/drift detectors and background trees.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::hoeffding::{HoeffdingConfig, HoeffdingTree};
use super::{check_input, Learner, LearnerError, Prediction};
use crate::drift::Adwin;
use crate::parallel::{derive_seed, Execution};
use crate::Label;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bagging {
    /// Each tree trains `k ~ Poisson(lambda)` times per sample.
    Poisson(f64),
    /// Each tree trains exactly `k` times per sample.
    Constant(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSubset {
    /// `ceil(sqrt(d))`
    Sqrt,
    All,
    Count(usize),
}

impl FeatureSubset {
    pub fn size(self, dims: usize) -> usize {
        match self {
            FeatureSubset::Sqrt => (dims as f64).sqrt().ceil() as usize,
            FeatureSubset::All => dims,
            FeatureSubset::Count(n) => n.min(dims),
        }
        .max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArfConfig {
    pub trees: usize,
    pub bagging: Bagging,
    pub features: FeatureSubset,
    /// `None` disables the warning detector (and background trees).
    pub warning_delta: Option<f64>,
    /// `None` disables the drift detector (and tree replacement).
    pub drift_delta: Option<f64>,
    /// Member tree settings. `max_features`, `adaptive` and `seed` are
    /// overridden per member.
    pub tree: HoeffdingConfig,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for ArfConfig {
    fn default() -> Self {
        ArfConfig {
            trees: 10,
            bagging: Bagging::Poisson(6.0),
            features: FeatureSubset::Sqrt,
            warning_delta: Some(0.01),
            drift_delta: Some(0.002),
            tree: HoeffdingConfig::default(),
            seed: 0,
            execution: Execution::Sequential,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Member {
    tree: HoeffdingTree,
    background: Option<HoeffdingTree>,
    warning: Option<Adwin>,
    drift: Option<Adwin>,
    rng: ChaCha8Rng,
    warnings: u64,
    replacements: u64,
}

impl Member {
    fn new(cfg: &ArfConfig, dims: usize, index: usize) -> Member {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0, index as u64));
        let tree = fresh_tree(cfg, dims, &mut rng);
        Member {
            tree,
            background: None,
            warning: cfg.warning_delta.map(Adwin::new),
            drift: cfg.drift_delta.map(Adwin::new),
            rng,
            warnings: 0,
            replacements: 0,
        }
    }

    fn bag_weight(&mut self, bagging: Bagging) -> u32 {
        match bagging {
            Bagging::Constant(k) => k,
            Bagging::Poisson(lambda) => Poisson::new(lambda)
                .expect("lambda > 0")
                .sample(&mut self.rng) as u32,
        }
    }

    fn learn(&mut self, cfg: &ArfConfig, dims: usize, x: &[f64], label: Label) {
        let wrong = self.tree.predict(x).label != label;
        let k = self.bag_weight(cfg.bagging);
        for _ in 0..k {
            self.tree
                .learn(x, label)
                .expect("input validated by the forest");
            if let Some(bg) = self.background.as_mut() {
                bg.learn(x, label).expect("input validated by the forest");
            }
        }

        if let Some(warning) = self.warning.as_mut() {
            if warning.update_error_increase(wrong) {
                self.warnings += 1;
                self.background = Some(fresh_tree(cfg, dims, &mut self.rng));
                self.warning = cfg.warning_delta.map(Adwin::new);
            }
        }
        if let Some(drift) = self.drift.as_mut() {
            if drift.update_error_increase(wrong) {
                self.replacements += 1;
                self.tree = match self.background.take() {
                    Some(bg) => bg,
                    None => fresh_tree(cfg, dims, &mut self.rng),
                };
                self.warning = cfg.warning_delta.map(Adwin::new);
                self.drift = cfg.drift_delta.map(Adwin::new);
            }
        }
    }

    fn weight(&self) -> f64 {
        self.drift.as_ref().map_or(1.0, |d| 1.0 - d.mean())
    }
}

fn fresh_tree(cfg: &ArfConfig, dims: usize, rng: &mut ChaCha8Rng) -> HoeffdingTree {
    let m = cfg.features.size(dims);
    HoeffdingTree::new(HoeffdingConfig {
        max_features: (m < dims).then_some(m),
        adaptive: false,
        seed: rng.next_u64(),
        ..cfg.tree.clone()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveRandomForest {
    config: ArfConfig,
    members: Vec<Member>,
    dims: usize,
}

impl AdaptiveRandomForest {
    pub fn new(config: ArfConfig) -> Self {
        assert!(config.trees > 0, "forest needs at least one tree");
        AdaptiveRandomForest {
            config,
            members: Vec::new(),
            dims: 0,
        }
    }

    pub fn config(&self) -> &ArfConfig {
        &self.config
    }

    pub fn set_execution(&mut self, execution: Execution) {
        self.config.execution = execution;
    }

    pub fn tree_count(&self) -> usize {
        self.config.trees
    }

    pub fn replacements(&self) -> u64 {
        self.members.iter().map(|m| m.replacements).sum()
    }

    pub fn warnings(&self) -> u64 {
        self.members.iter().map(|m| m.warnings).sum()
    }

    pub fn background_trees(&self) -> usize {
        self.members
            .iter()
            .filter(|m| m.background.is_some())
            .count()
    }

    /// Draws `n` bag weights from a fresh member RNG; used to check the
    /// sampler.
    pub fn sample_bag_weights(config: &ArfConfig, n: usize) -> Vec<u32> {
        let mut member = Member::new(config, 1, 0);
        (0..n).map(|_| member.bag_weight(config.bagging)).collect()
    }
}

impl Learner for AdaptiveRandomForest {
    fn name(&self) -> &'static str {
        "arf"
    }

    fn predict(&self, x: &[f64]) -> Prediction {
        if x.len() != self.dims {
            return Prediction::UNTRAINED;
        }
        let mut weighted = 0.0;
        let mut total_weight = 0.0;
        let mut plain = 0.0;
        let mut voters = 0usize;
        for m in self.members.iter().filter(|m| m.tree.samples_seen() > 0) {
            let score = m.tree.predict(x).score;
            let w = m.weight();
            weighted += w * score;
            total_weight += w;
            plain += score;
            voters += 1;
        }
        if voters == 0 {
            return Prediction::UNTRAINED;
        }
        let score = if total_weight > 0.0 {
            weighted / total_weight
        } else {
            plain / voters as f64
        };
        Prediction::new(score)
    }

    fn learn(&mut self, x: &[f64], label: Label) -> Result<(), LearnerError> {
        check_input(x, (self.dims > 0).then_some(self.dims))?;
        if self.members.is_empty() {
            self.dims = x.len();
            self.members = (0..self.config.trees)
                .map(|i| Member::new(&self.config, self.dims, i))
                .collect();
        }
        let cfg = &self.config;
        let dims = self.dims;
        cfg.execution
            .for_each_mut(&mut self.members, |_, m| m.learn(cfg, dims, x, label));
        Ok(())
    }

    fn drift_count(&self) -> u64 {
        self.replacements()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn separable(rng: &mut ChaCha8Rng, flip: bool) -> (Vec<f64>, Label) {
        let x: Vec<f64> = (0..6).map(|_| rng.random()).collect();
        let y = (x[0] + x[1] >= 1.0) ^ flip;
        (x, Label::from_index(y as usize))
    }

    #[test]
    fn poisson_mean() {
        let cfg = ArfConfig {
            seed: 3,
            ..ArfConfig::default()
        };
        let ks = AdaptiveRandomForest::sample_bag_weights(&cfg, 100_000);
        let mean = ks.iter().map(|&k| k as f64).sum::<f64>() / ks.len() as f64;
        assert!((5.9..=6.1).contains(&mean), "mean {mean}");
    }

    #[test]
    fn untrained_forest_defaults_to_benign() {
        let f = AdaptiveRandomForest::new(ArfConfig::default());
        assert_eq!(f.predict(&[0.0; 6]), Prediction::UNTRAINED);
    }

    #[test]
    fn equal_weight_tie_goes_malicious() {
        let p = Prediction::new((0.2 + 0.8) / 2.0);
        assert_eq!(p.label, Label::Malicious);
        assert_abs_diff_eq!(p.score, 0.5);
    }

    #[test]
    fn stationary_stream_rarely_replaces_trees() {
        let mut quiet = 0;
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut f = AdaptiveRandomForest::new(ArfConfig {
                seed,
                ..ArfConfig::default()
            });
            for _ in 0..10_000 {
                let (x, y) = separable(&mut rng, false);
                f.learn(&x, y).unwrap();
            }
            quiet += (f.replacements() == 0) as usize;
        }
        assert!(quiet >= 18, "only {quiet}/20 seeds without replacements");
    }

    #[test]
    fn abrupt_flip_triggers_replacement() {
        let mut ok = 0;
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let mut f = AdaptiveRandomForest::new(ArfConfig {
                seed,
                ..ArfConfig::default()
            });
            for _ in 0..3000 {
                let (x, y) = separable(&mut rng, false);
                f.learn(&x, y).unwrap();
            }
            let before = f.replacements();
            for _ in 0..1000 {
                let (x, y) = separable(&mut rng, true);
                f.learn(&x, y).unwrap();
            }
            ok += (f.replacements() > before) as usize;
        }
        assert!(ok >= 19, "only {ok}/20 seeds replaced a tree");
    }

    #[test]
    fn parallel_members_match_sequential() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let data: Vec<_> = (0..3000).map(|i| separable(&mut rng, i > 1500)).collect();
        let run = |execution| {
            let mut f = AdaptiveRandomForest::new(ArfConfig {
                seed: 4,
                execution,
                ..ArfConfig::default()
            });
            data.iter()
                .map(|(x, y)| {
                    let p = f.predict(x);
                    f.learn(x, *y).unwrap();
                    p
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(Execution::Sequential), run(Execution::Parallel));
    }
}
