//! Batch random forest of CART trees (Gini impurity), trained once and frozen.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_input, Learner, LearnerError, Prediction};
use crate::parallel::{derive_seed, Execution};
use crate::Label;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchForestConfig {
    pub trees: usize,
    /// Features tried per node; `None` means `ceil(sqrt(d))`.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for BatchForestConfig {
    fn default() -> Self {
        BatchForestConfig {
            trees: 100,
            max_features: None,
            bootstrap: true,
            max_depth: None,
            min_samples_leaf: 1,
            seed: 0,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum CartNode {
    Leaf {
        counts: [u32; 2],
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartTree {
    nodes: Vec<CartNode>,
}

impl CartTree {
    /// Majority vote of the reached leaf, ties malicious.
    pub fn vote(&self, x: &[f64]) -> Label {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                CartNode::Leaf { counts } => {
                    return if counts[1] >= counts[0] {
                        Label::Malicious
                    } else {
                        Label::Benign
                    }
                }
                CartNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

struct Builder<'a> {
    xs: &'a [Vec<f64>],
    ys: &'a [usize],
    dims: usize,
    max_features: usize,
    max_depth: Option<usize>,
    min_leaf: usize,
    rng: ChaCha8Rng,
    nodes: Vec<CartNode>,
}

fn gini(counts: [f64; 2]) -> f64 {
    let n = counts[0] + counts[1];
    if n == 0.0 {
        return 0.0;
    }
    let p = counts[0] / n;
    2.0 * p * (1.0 - p)
}

impl Builder<'_> {
    fn build(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let mut counts = [0u32; 2];
        for &i in idx.iter() {
            counts[self.ys[i]] += 1;
        }
        let at = self.nodes.len();
        self.nodes.push(CartNode::Leaf { counts });
        let pure = counts[0] == 0 || counts[1] == 0;
        if pure || idx.len() < 2 * self.min_leaf || self.max_depth.is_some_and(|d| depth >= d) {
            return at;
        }
        let Some((feature, threshold)) = self.best_split(idx, counts) else {
            return at;
        };
        // partition in place: <= threshold first
        let mut split = 0;
        for j in 0..idx.len() {
            if self.xs[idx[j]][feature] <= threshold {
                idx.swap(split, j);
                split += 1;
            }
        }
        let (l, r) = idx.split_at_mut(split);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[at] = CartNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        at
    }

    /// Visits features in random order until `max_features` non-constant ones
    /// were scored (or all features were tried).
    fn best_split(&mut self, idx: &[usize], counts: [u32; 2]) -> Option<(usize, f64)> {
        let mut order: Vec<usize> = (0..self.dims).collect();
        order.shuffle(&mut self.rng);
        let n = idx.len() as f64;
        let parent = gini([counts[0] as f64, counts[1] as f64]);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut scored = 0;
        let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(idx.len());
        for feature in order {
            if scored >= self.max_features {
                break;
            }
            sorted.clear();
            sorted.extend(idx.iter().map(|&i| (self.xs[i][feature], self.ys[i])));
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            if sorted[0].0 == sorted[sorted.len() - 1].0 {
                continue;
            }
            scored += 1;
            let mut left = [0.0f64; 2];
            let total = [counts[0] as f64, counts[1] as f64];
            for j in 0..sorted.len() - 1 {
                left[sorted[j].1] += 1.0;
                let nl = (j + 1) as f64;
                if sorted[j].0 == sorted[j + 1].0
                    || j + 1 < self.min_leaf
                    || sorted.len() - (j + 1) < self.min_leaf
                {
                    continue;
                }
                let right = [total[0] - left[0], total[1] - left[1]];
                let impurity = (nl / n) * gini(left) + ((n - nl) / n) * gini(right);
                let decrease = parent - impurity;
                if best.is_none_or(|(d, _, _)| decrease > d) {
                    let threshold = 0.5 * (sorted[j].0 + sorted[j + 1].0);
                    best = Some((decrease, feature, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

fn train_tree(
    xs: &[Vec<f64>],
    ys: &[usize],
    config: &BatchForestConfig,
    max_features: usize,
    seed: u64,
) -> CartTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = xs.len();
    let mut idx: Vec<usize> = if config.bootstrap {
        (0..n).map(|_| rng.random_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    let mut builder = Builder {
        xs,
        ys,
        dims: xs[0].len(),
        max_features,
        max_depth: config.max_depth,
        min_leaf: config.min_samples_leaf.max(1),
        rng,
        nodes: Vec::new(),
    };
    builder.build(&mut idx, 0);
    CartTree {
        nodes: builder.nodes,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchForest {
    config: BatchForestConfig,
    trees: Vec<CartTree>,
    dims: usize,
}

impl BatchForest {
    /// Trains `config.trees` CART trees on bootstrap resamples.
    pub fn train(
        samples: &[(Vec<f64>, Label)],
        config: BatchForestConfig,
    ) -> Result<BatchForest, LearnerError> {
        if samples.len() < 2 {
            return Err(LearnerError::TooFewSamples(samples.len()));
        }
        let dims = samples[0].0.len();
        for (x, _) in samples {
            check_input(x, Some(dims))?;
        }
        if !samples.iter().any(|(_, y)| y.is_malicious())
            || samples.iter().all(|(_, y)| y.is_malicious())
        {
            return Err(LearnerError::SingleClassTrainingSet);
        }
        let xs: Vec<Vec<f64>> = samples.iter().map(|(x, _)| x.clone()).collect();
        let ys: Vec<usize> = samples.iter().map(|(_, y)| y.index()).collect();
        let max_features = config
            .max_features
            .unwrap_or_else(|| (dims as f64).sqrt().ceil() as usize)
            .clamp(1, dims);
        let trees = config.execution.map_range(config.trees, |t| {
            train_tree(
                &xs,
                &ys,
                &config,
                max_features,
                derive_seed(config.seed, 0, t as u64),
            )
        });
        Ok(BatchForest {
            config,
            trees,
            dims,
        })
    }

    pub fn config(&self) -> &BatchForestConfig {
        &self.config
    }

    pub fn trees(&self) -> &[CartTree] {
        &self.trees
    }
}

impl Learner for BatchForest {
    fn name(&self) -> &'static str {
        "batch-rf"
    }

    fn predict(&self, x: &[f64]) -> Prediction {
        if x.len() != self.dims || self.trees.is_empty() {
            return Prediction::UNTRAINED;
        }
        let malicious = self
            .trees
            .iter()
            .filter(|t| t.vote(x) == Label::Malicious)
            .count();
        Prediction::new(malicious as f64 / self.trees.len() as f64)
    }

    fn learn(&mut self, _x: &[f64], _label: Label) -> Result<(), LearnerError> {
        Err(LearnerError::ModelFrozen)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset(seed: u64, n: usize) -> Vec<(Vec<f64>, Label)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let x: Vec<f64> = (0..5).map(|_| rng.random()).collect();
                let y = Label::from_index((2.0 * x[0] - x[1] > 0.5) as usize);
                (x, y)
            })
            .collect()
    }

    fn accuracy(f: &BatchForest, data: &[(Vec<f64>, Label)]) -> f64 {
        data.iter()
            .filter(|(x, y)| f.predict(x).label == *y)
            .count() as f64
            / data.len() as f64
    }

    #[test]
    fn separable_training_accuracy() {
        let data = dataset(1, 600);
        let f = BatchForest::train(&data, BatchForestConfig::default()).unwrap();
        assert_eq!(f.trees().len(), 100);
        assert!(accuracy(&f, &data) >= 0.99);
    }

    #[test]
    fn single_full_tree_memorizes() {
        let data = dataset(2, 400);
        let cfg = BatchForestConfig {
            trees: 1,
            bootstrap: false,
            max_features: Some(5),
            ..BatchForestConfig::default()
        };
        let f = BatchForest::train(&data, cfg).unwrap();
        assert_eq!(accuracy(&f, &data), 1.0);
    }

    #[test]
    fn frozen_after_training() {
        let data = dataset(3, 50);
        let mut f = BatchForest::train(&data, BatchForestConfig::default()).unwrap();
        assert!(matches!(
            f.learn(&data[0].0, Label::Benign),
            Err(LearnerError::ModelFrozen)
        ));
    }

    #[test]
    fn single_class_rejected() {
        let data: Vec<_> = (0..10).map(|i| (vec![i as f64], Label::Benign)).collect();
        assert!(matches!(
            BatchForest::train(&data, BatchForestConfig::default()),
            Err(LearnerError::SingleClassTrainingSet)
        ));
        assert!(matches!(
            BatchForest::train(&data[..1], BatchForestConfig::default()),
            Err(LearnerError::TooFewSamples(1))
        ));
    }

    #[test]
    fn even_split_vote_is_malicious() {
        // two unbootstrapped stumps agree, so build a 2-tree forest by hand
        let a = train_tree(
            &[vec![0.0], vec![1.0]],
            &[0, 1],
            &BatchForestConfig {
                bootstrap: false,
                ..Default::default()
            },
            1,
            0,
        );
        let benign_only = CartTree {
            nodes: vec![CartNode::Leaf { counts: [3, 0] }],
        };
        let f = BatchForest {
            config: BatchForestConfig::default(),
            trees: vec![a, benign_only],
            dims: 1,
        };
        let p = f.predict(&[1.0]);
        assert_eq!(p.score, 0.5);
        assert_eq!(p.label, Label::Malicious);
        assert_eq!(f.predict(&[1.0]), p);
    }

    #[test]
    fn deterministic_given_seed() {
        let data = dataset(4, 300);
        let cfg = BatchForestConfig {
            trees: 20,
            seed: 9,
            ..BatchForestConfig::default()
        };
        let a = BatchForest::train(&data, cfg.clone()).unwrap();
        let b = BatchForest::train(
            &data,
            BatchForestConfig {
                execution: Execution::Sequential,
                ..cfg
            },
        )
        .unwrap();
        assert_eq!(a.trees, b.trees);
    }
}
