//! Hoeffding tree (VFDT) with an optional adaptive mode.
//!
//! Leaves keep per-class Gaussian observers for each candidate feature.
//! Every `grace_period` samples a leaf scores candidate thresholds by
//! information gain and splits when the best two candidates are separated by
//! the Hoeffding bound (or the bound falls under the tie threshold).
//!
//! In adaptive mode every node also tracks its 0/1 error with ADWIN. When a
//! split node's error rises significantly an alternate subtree starts growing
//! beside it, and replaces it once its own error is lower by more than the
//! ADWIN cut threshold.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::naive_bayes::Welford;
use super::{check_input, Learner, LearnerError, Prediction};
use crate::drift::{cut_threshold, Adwin};
use crate::Label;

/// `sqrt(R^2 ln(1/delta) / (2n))`
pub fn hoeffding_bound(range: f64, delta: f64, n: f64) -> f64 {
    (range * range * (1.0 / delta).ln() / (2.0 * n)).sqrt()
}

/// Shannon entropy in bits of a class distribution.
pub fn entropy(dist: &[f64; 2]) -> f64 {
    let total = dist[0] + dist[1];
    if total <= 0.0 {
        return 0.0;
    }
    dist.iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum()
}

/// Information gain of splitting `parent` into `left`/`right`. Splits that
/// leave less than 1% of the weight on either side score `-inf`.
pub fn info_gain(left: &[f64; 2], right: &[f64; 2]) -> f64 {
    let wl = left[0] + left[1];
    let wr = right[0] + right[1];
    let total = wl + wr;
    if total <= 0.0 || wl < MIN_BRANCH_FRACTION * total || wr < MIN_BRANCH_FRACTION * total {
        return f64::NEG_INFINITY;
    }
    let parent = [left[0] + right[0], left[1] + right[1]];
    entropy(&parent) - (wl / total) * entropy(left) - (wr / total) * entropy(right)
}

const MIN_BRANCH_FRACTION: f64 = 0.01;
/// Information gain range for two classes: `log2(2)`.
const GAIN_RANGE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoeffdingConfig {
    /// Samples a leaf must see between split attempts.
    pub grace_period: u64,
    pub split_confidence: f64,
    pub tie_threshold: f64,
    /// Candidate thresholds evaluated per feature.
    pub split_points: usize,
    /// Random feature subset size per leaf; `None` uses every feature.
    pub max_features: Option<usize>,
    pub adaptive: bool,
    /// ADWIN delta for per-node error tracking (adaptive mode).
    pub drift_delta: f64,
    /// Confidence used when comparing an alternate subtree with its original.
    pub swap_delta: f64,
    pub seed: u64,
}

impl Default for HoeffdingConfig {
    fn default() -> Self {
        HoeffdingConfig {
            grace_period: 200,
            split_confidence: 1e-7,
            tie_threshold: 0.05,
            split_points: 10,
            max_features: None,
            adaptive: false,
            drift_delta: 0.002,
            swap_delta: 0.05,
            seed: 0,
        }
    }
}

impl HoeffdingConfig {
    pub fn adaptive() -> Self {
        HoeffdingConfig {
            adaptive: true,
            ..Self::default()
        }
    }
}

/// Instrumentation record for one leaf split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitEvent {
    pub feature: usize,
    pub threshold: f64,
    pub best_gain: f64,
    pub second_gain: f64,
    pub bound: f64,
    pub leaf_weight: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
struct ClassGaussian {
    stats: Welford,
    min: f64,
    max: f64,
}

impl ClassGaussian {
    fn push(&mut self, x: f64) {
        if self.stats.n == 0 {
            self.min = x;
            self.max = x;
        } else {
            self.min = self.min.min(x);
            self.max = self.max.max(x);
        }
        self.stats.push(x);
    }

    /// Estimated weight of observations `<= t`.
    fn weight_at_or_below(&self, t: f64) -> f64 {
        let n = self.stats.n as f64;
        if self.stats.n == 0 || t < self.min {
            return 0.0;
        }
        if t >= self.max {
            return n;
        }
        let sd = self.stats.variance().sqrt();
        if sd <= 0.0 {
            return if t >= self.stats.mean { n } else { 0.0 };
        }
        n * normal_cdf((t - self.stats.mean) / sd)
    }
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Complementary error function (Numerical Recipes `erfcc`, |err| < 1.2e-7).
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let r = t
        * (-z * z - 1.265_512_23
            + t * (1.000_023_68
                + t * (0.374_091_96
                    + t * (0.096_784_18
                        + t * (-0.186_288_06
                            + t * (0.278_868_07
                                + t * (-1.135_203_98
                                    + t * (1.488_515_87
                                        + t * (-0.822_152_23 + t * 0.170_872_77)))))))))
            .exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Leaf {
    counts: [f64; 2],
    features: Vec<usize>,
    /// `observers[i][class]` for feature `features[i]`.
    observers: Vec<[ClassGaussian; 2]>,
    weight_at_last_eval: f64,
}

struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
    left: [f64; 2],
    right: [f64; 2],
}

impl Leaf {
    fn new(counts: [f64; 2], features: Vec<usize>) -> Leaf {
        let observers = vec![[ClassGaussian::default(); 2]; features.len()];
        Leaf {
            counts,
            features,
            observers,
            weight_at_last_eval: counts[0] + counts[1],
        }
    }

    fn weight(&self) -> f64 {
        self.counts[0] + self.counts[1]
    }

    fn learn(&mut self, x: &[f64], class: usize) {
        self.counts[class] += 1.0;
        for (obs, &f) in self.observers.iter_mut().zip(&self.features) {
            obs[class].push(x[f]);
        }
    }

    fn prediction(&self) -> Prediction {
        let score = (self.counts[1] + 1.0) / (self.weight() + 2.0);
        Prediction::new(score)
    }

    /// Best threshold per candidate feature, sorted by descending gain.
    fn candidates(&self, split_points: usize) -> Vec<Candidate> {
        let mut out = Vec::with_capacity(self.features.len());
        for (obs, &feature) in self.observers.iter().zip(&self.features) {
            let seen: Vec<&ClassGaussian> = obs.iter().filter(|c| c.stats.n > 0).collect();
            if seen.is_empty() {
                continue;
            }
            let lo = seen.iter().map(|c| c.min).fold(f64::INFINITY, f64::min);
            let hi = seen.iter().map(|c| c.max).fold(f64::NEG_INFINITY, f64::max);
            if hi <= lo {
                continue;
            }
            let step = (hi - lo) / (split_points + 1) as f64;
            let totals = [obs[0].stats.n as f64, obs[1].stats.n as f64];
            let mut best: Option<Candidate> = None;
            for i in 1..=split_points {
                let threshold = lo + step * i as f64;
                let left = [
                    obs[0].weight_at_or_below(threshold),
                    obs[1].weight_at_or_below(threshold),
                ];
                let right = [totals[0] - left[0], totals[1] - left[1]];
                let gain = info_gain(&left, &right);
                if best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(Candidate {
                        gain,
                        feature,
                        threshold,
                        left,
                        right,
                    });
                }
            }
            out.extend(best);
        }
        out.sort_by(|a, b| b.gain.total_cmp(&a.gain));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum NodeKind {
    Leaf(Leaf),
    Split {
        feature: usize,
        threshold: f64,
        children: Box<[Node; 2]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Node {
    kind: NodeKind,
    /// 0/1 error tracker, adaptive mode only.
    error: Option<Adwin>,
    alternate: Option<Box<Node>>,
}

impl Node {
    fn leaf(leaf: Leaf, cfg: &HoeffdingConfig) -> Node {
        Node {
            kind: NodeKind::Leaf(leaf),
            error: cfg.adaptive.then(|| Adwin::new(cfg.drift_delta)),
            alternate: None,
        }
    }

    fn route(&self, x: &[f64]) -> &Leaf {
        let mut node = self;
        loop {
            match &node.kind {
                NodeKind::Leaf(leaf) => return leaf,
                NodeKind::Split {
                    feature,
                    threshold,
                    children,
                } => node = &children[branch(x[*feature], *threshold)],
            }
        }
    }

    fn count(&self, stats: &mut TreeStats, depth: usize) {
        stats.depth = stats.depth.max(depth);
        if self.alternate.is_some() {
            stats.alternates += 1;
        }
        match &self.kind {
            NodeKind::Leaf(_) => stats.leaves += 1,
            NodeKind::Split { children, .. } => {
                stats.splits += 1;
                children[0].count(stats, depth + 1);
                children[1].count(stats, depth + 1);
            }
        }
    }
}

fn branch(value: f64, threshold: f64) -> usize {
    if value <= threshold {
        0
    } else {
        1
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TreeStats {
    pub splits: usize,
    pub leaves: usize,
    pub depth: usize,
    pub alternates: usize,
}

struct LearnCtx<'a> {
    cfg: &'a HoeffdingConfig,
    dims: usize,
    rng: &'a mut ChaCha8Rng,
    split_log: &'a mut Vec<SplitEvent>,
    swaps: &'a mut u64,
}

impl LearnCtx<'_> {
    fn feature_subset(&mut self) -> Vec<usize> {
        match self.cfg.max_features {
            Some(m) if m < self.dims => {
                let mut idx = rand::seq::index::sample(self.rng, self.dims, m).into_vec();
                idx.sort_unstable();
                idx
            }
            _ => (0..self.dims).collect(),
        }
    }

    fn new_leaf(&mut self, counts: [f64; 2]) -> Node {
        let features = self.feature_subset();
        Node::leaf(Leaf::new(counts, features), self.cfg)
    }

    fn learn(&mut self, node: &mut Node, x: &[f64], class: usize) {
        if self.cfg.adaptive {
            let wrong = node.route(x).prediction().label.index() != class;
            if let Some(err) = node.error.as_mut() {
                if err.update_error_increase(wrong)
                    && node.alternate.is_none()
                    && matches!(node.kind, NodeKind::Split { .. })
                {
                    node.alternate = Some(Box::new(self.new_leaf([0.0; 2])));
                }
            }
            if let Some(alt) = node.alternate.as_mut() {
                match compare_alternate(node.error.as_ref(), alt.error.as_ref(), self.cfg) {
                    Swap::Promote => {
                        let alt = node.alternate.take().expect("alternate present");
                        *node = *alt;
                        *self.swaps += 1;
                        return self.learn(node, x, class);
                    }
                    Swap::Discard => node.alternate = None,
                    Swap::Keep => self.learn(alt, x, class),
                }
            }
        }

        match &mut node.kind {
            NodeKind::Split {
                feature,
                threshold,
                children,
            } => {
                let b = branch(x[*feature], *threshold);
                self.learn(&mut children[b], x, class);
            }
            NodeKind::Leaf(leaf) => {
                leaf.learn(x, class);
                if leaf.weight() - leaf.weight_at_last_eval >= self.cfg.grace_period as f64 {
                    leaf.weight_at_last_eval = leaf.weight();
                    if let Some(kind) = self.try_split(leaf) {
                        node.kind = kind;
                        if self.cfg.adaptive {
                            node.error = Some(Adwin::new(self.cfg.drift_delta));
                        }
                    }
                }
            }
        }
    }

    fn try_split(&mut self, leaf: &Leaf) -> Option<NodeKind> {
        let observed: [u64; 2] = [0, 1].map(|c| {
            leaf.observers
                .first()
                .map_or(0, |o: &[ClassGaussian; 2]| o[c].stats.n)
        });
        if observed[0] == 0 || observed[1] == 0 {
            return None;
        }
        let candidates = leaf.candidates(self.cfg.split_points);
        let best = candidates.first()?;
        let second_gain = candidates.get(1).map_or(0.0, |c| c.gain.max(0.0));
        if best.gain.is_nan() || best.gain <= 0.0 {
            return None;
        }
        let bound = hoeffding_bound(GAIN_RANGE, self.cfg.split_confidence, leaf.weight());
        if best.gain - second_gain > bound || bound < self.cfg.tie_threshold {
            self.split_log.push(SplitEvent {
                feature: best.feature,
                threshold: best.threshold,
                best_gain: best.gain,
                second_gain,
                bound,
                leaf_weight: leaf.weight(),
            });
            let (feature, threshold, left, right) =
                (best.feature, best.threshold, best.left, best.right);
            let children = Box::new([self.new_leaf(left), self.new_leaf(right)]);
            return Some(NodeKind::Split {
                feature,
                threshold,
                children,
            });
        }
        None
    }
}

enum Swap {
    Keep,
    Promote,
    Discard,
}

/// Promote when `alt_error + eps < original_error`, discard when the reverse
/// holds. `eps` is the ADWIN cut threshold over both error windows.
fn compare_alternate(
    original: Option<&Adwin>,
    alternate: Option<&Adwin>,
    cfg: &HoeffdingConfig,
) -> Swap {
    let (Some(orig), Some(alt)) = (original, alternate) else {
        return Swap::Keep;
    };
    if orig.width() == 0 || alt.width() == 0 {
        return Swap::Keep;
    }
    let (e_orig, e_alt) = (orig.mean(), alt.mean());
    let variance = e_orig * (1.0 - e_orig);
    let width = (orig.width() + alt.width()) as f64;
    let eps = cut_threshold(
        orig.width(),
        alt.width(),
        variance,
        cfg.swap_delta / width.ln(),
    );
    if e_alt + eps < e_orig {
        Swap::Promote
    } else if e_orig + eps < e_alt {
        Swap::Discard
    } else {
        Swap::Keep
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoeffdingTree {
    config: HoeffdingConfig,
    root: Option<Node>,
    dims: usize,
    samples_seen: u64,
    swaps: u64,
    split_log: Vec<SplitEvent>,
    rng: ChaCha8Rng,
}

impl HoeffdingTree {
    pub fn new(config: HoeffdingConfig) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        HoeffdingTree {
            config,
            root: None,
            dims: 0,
            samples_seen: 0,
            swaps: 0,
            split_log: Vec::new(),
            rng,
        }
    }

    pub fn config(&self) -> &HoeffdingConfig {
        &self.config
    }

    pub fn samples_seen(&self) -> u64 {
        self.samples_seen
    }

    pub fn split_events(&self) -> &[SplitEvent] {
        &self.split_log
    }

    /// Number of alternate subtrees promoted over their originals.
    pub fn swaps(&self) -> u64 {
        self.swaps
    }

    pub fn stats(&self) -> TreeStats {
        let mut stats = TreeStats::default();
        if let Some(root) = &self.root {
            root.count(&mut stats, 0);
        }
        stats
    }

    /// `(feature, threshold)` of every split node in the main tree.
    pub fn split_nodes(&self) -> Vec<(usize, f64)> {
        fn walk(node: &Node, out: &mut Vec<(usize, f64)>) {
            if let NodeKind::Split {
                feature,
                threshold,
                children,
            } = &node.kind
            {
                out.push((*feature, *threshold));
                walk(&children[0], out);
                walk(&children[1], out);
            }
        }
        let mut out = Vec::new();
        if let Some(root) = &self.root {
            walk(root, &mut out);
        }
        out
    }

    /// Class counts at the leaf `x` routes to.
    pub fn leaf_counts(&self, x: &[f64]) -> Option<[f64; 2]> {
        self.root.as_ref().map(|r| r.route(x).counts)
    }
}

impl Learner for HoeffdingTree {
    fn name(&self) -> &'static str {
        if self.config.adaptive {
            "hat"
        } else {
            "ht"
        }
    }

    fn predict(&self, x: &[f64]) -> Prediction {
        match &self.root {
            Some(root) if self.samples_seen > 0 && x.len() == self.dims => {
                root.route(x).prediction()
            }
            _ => Prediction::UNTRAINED,
        }
    }

    fn learn(&mut self, x: &[f64], label: Label) -> Result<(), LearnerError> {
        check_input(x, (self.dims > 0).then_some(self.dims))?;
        self.dims = x.len();
        let mut root = self.root.take();
        let mut ctx = LearnCtx {
            cfg: &self.config,
            dims: self.dims,
            rng: &mut self.rng,
            split_log: &mut self.split_log,
            swaps: &mut self.swaps,
        };
        let node = root.get_or_insert_with(|| ctx.new_leaf([0.0; 2]));
        ctx.learn(node, x, label.index());
        self.root = root;
        self.samples_seen += 1;
        Ok(())
    }

    fn drift_count(&self) -> u64 {
        self.swaps
    }
}
