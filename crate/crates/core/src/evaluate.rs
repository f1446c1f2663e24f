//! Prequential (test-then-train) evaluation, metrics, aggregation and
//! throughput accounting.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{FeatureVector, MinMaxScaler};
use crate::learners::{BatchForest, BatchForestConfig, Frozen, Learner, LearnerError};
use crate::synth::DriftSchedule;
use crate::Label;

/// Version tag of the run/aggregate JSON formats.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("EmptyStream: nothing to evaluate")]
    EmptyStream,
    #[error("learner failed at sample {index}: {source}")]
    Learner { index: usize, source: LearnerError },
    #[error("SingleClassTrainingSet: phase-one training data must contain both classes")]
    SingleClassTrainingSet,
    #[error("TooFewRuns: aggregation needs at least 2 runs, got {0}")]
    TooFewRuns(usize),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// Malicious is the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn record(&mut self, truth: Label, predicted: Label) {
        match (truth.is_malicious(), predicted.is_malicious()) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
            (true, false) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Zero denominators give 0.
pub fn metrics_from_counts(c: &ConfusionCounts) -> Metrics {
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Metrics {
        accuracy: ratio(c.tp + c.tn, c.total()),
        precision,
        recall,
        f1,
    }
}

/// Rank-statistic AUC: P(score_pos > score_neg) + P(tie) / 2, via midranks.
/// `None` unless both classes are present.
pub fn auc(scored: &[(f64, Label)]) -> Option<f64> {
    let positives = scored.iter().filter(|(_, y)| y.is_malicious()).count();
    let negatives = scored.len() - positives;
    if positives == 0 || negatives == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[a].0.total_cmp(&scored[b].0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scored[order[j + 1]].0 == scored[order[i]].0 {
            j += 1;
        }
        // ranks i+1..=j+1 share their mean
        let mid = (i + j + 2) as f64 / 2.0;
        let pos_in_tie = order[i..=j]
            .iter()
            .filter(|&&k| scored[k].1.is_malicious())
            .count();
        rank_sum += mid * pos_in_tie as f64;
        i = j + 1;
    }
    let p = positives as f64;
    let u = rank_sum - p * (p + 1.0) / 2.0;
    Some(u / (p * negatives as f64))
}

/// Megabits per second.
pub fn throughput(bytes_processed: u64, wall_seconds: f64) -> f64 {
    if bytes_processed == 0 {
        return 0.0;
    }
    (bytes_processed as f64 * 8.0 / 1e6) / wall_seconds.max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalMetrics {
    pub f1: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub auc: Option<f64>,
}

/// Held-out quality of the batch reference on phase one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    pub train_samples: usize,
    pub validation_samples: usize,
    pub accuracy: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub learner: String,
    /// Cumulative F1 after each sample.
    pub trace: Vec<f64>,
    pub schedule: DriftSchedule,
    pub metrics: FinalMetrics,
    pub counts: ConfusionCounts,
    /// Sample indices after which the learner adapted to drift.
    pub drift_events: Vec<usize>,
    pub bytes_processed: u64,
    pub wall_seconds: f64,
    pub bandwidth_mbps: f64,
    pub validation: Option<Validation>,
}

impl RunResult {
    /// Writes `sample_index,cumulative_f1,phase` rows.
    pub fn write_trace_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "sample_index,cumulative_f1,phase")?;
        for (i, f1) in self.trace.iter().enumerate() {
            writeln!(w, "{i},{f1},{}", self.schedule.phase_of(i) + 1)?;
        }
        Ok(())
    }
}

/// Test-then-train over the stream: predict, record, then learn.
pub fn prequential_run<L: Learner + ?Sized>(
    learner: &mut L,
    stream: &[FeatureVector],
    schedule: &DriftSchedule,
) -> Result<RunResult, EvalError> {
    run_inner(learner, stream, schedule, None)
}

/// Like [`prequential_run`], with online min-max scaling applied to each
/// sample before it reaches the learner.
pub fn prequential_run_scaled<L: Learner + ?Sized>(
    learner: &mut L,
    stream: &[FeatureVector],
    schedule: &DriftSchedule,
) -> Result<RunResult, EvalError> {
    run_inner(learner, stream, schedule, Some(MinMaxScaler::new()))
}

fn run_inner<L: Learner + ?Sized>(
    learner: &mut L,
    stream: &[FeatureVector],
    schedule: &DriftSchedule,
    mut scaler: Option<MinMaxScaler>,
) -> Result<RunResult, EvalError> {
    if stream.is_empty() {
        return Err(EvalError::EmptyStream);
    }
    let start = Instant::now();
    let mut counts = ConfusionCounts::default();
    let mut trace = Vec::with_capacity(stream.len());
    let mut scored = Vec::with_capacity(stream.len());
    let mut drift_events = Vec::new();
    let mut bytes = 0u64;
    let mut drift_seen = learner.drift_count();
    let mut scaled: Vec<f64>;
    for (index, sample) in stream.iter().enumerate() {
        let x: &[f64] = match scaler.as_mut() {
            Some(s) => {
                scaled = s.scale_update(&sample.features);
                &scaled
            }
            None => &sample.features,
        };
        let p = learner.predict(x);
        counts.record(sample.label, p.label);
        scored.push((p.score, sample.label));
        trace.push(metrics_from_counts(&counts).f1);
        learner
            .learn(x, sample.label)
            .map_err(|source| EvalError::Learner { index, source })?;
        let drifts = learner.drift_count();
        if drifts > drift_seen {
            drift_events.push(index);
            drift_seen = drifts;
        }
        bytes += sample.byte_count;
    }
    let wall_seconds = start.elapsed().as_secs_f64();
    let m = metrics_from_counts(&counts);
    Ok(RunResult {
        learner: learner.name().to_string(),
        trace,
        schedule: schedule.clone(),
        metrics: FinalMetrics {
            f1: m.f1,
            accuracy: m.accuracy,
            precision: m.precision,
            recall: m.recall,
            auc: auc(&scored),
        },
        counts,
        drift_events,
        bytes_processed: bytes,
        wall_seconds,
        bandwidth_mbps: throughput(bytes, wall_seconds),
        validation: None,
    })
}

/// Fraction of phase one used for training; the rest is the validation split.
pub const TRAIN_FRACTION: f64 = 0.8;

/// Splits phase one 80/20 (shuffled with `config.seed`), trains the batch
/// forest on the larger part and returns it with its validation scores.
pub fn train_batch_reference(
    phase_one: &[FeatureVector],
    config: &BatchForestConfig,
) -> Result<(BatchForest, Validation), EvalError> {
    let both = phase_one.iter().any(|v| v.label.is_malicious())
        && phase_one.iter().any(|v| !v.label.is_malicious());
    if !both {
        return Err(EvalError::SingleClassTrainingSet);
    }
    let mut idx: Vec<usize> = (0..phase_one.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));
    let cut =
        ((phase_one.len() as f64 * TRAIN_FRACTION).round() as usize).clamp(1, phase_one.len());
    let (train_idx, valid_idx) = idx.split_at(cut);
    let train: Vec<(Vec<f64>, Label)> = train_idx
        .iter()
        .map(|&i| (phase_one[i].features.clone(), phase_one[i].label))
        .collect();
    let model = BatchForest::train(&train, config.clone()).map_err(|e| match e {
        LearnerError::SingleClassTrainingSet => EvalError::SingleClassTrainingSet,
        source => EvalError::Learner { index: 0, source },
    })?;
    let mut counts = ConfusionCounts::default();
    for &i in valid_idx {
        counts.record(
            phase_one[i].label,
            model.predict(&phase_one[i].features).label,
        );
    }
    let m = metrics_from_counts(&counts);
    Ok((
        model,
        Validation {
            train_samples: train_idx.len(),
            validation_samples: valid_idx.len(),
            accuracy: m.accuracy,
            f1: m.f1,
        },
    ))
}

/// Trains the batch forest on phase one and evaluates the whole stream with
/// the frozen model under the same per-sample recording.
pub fn batch_reference_run(
    phase_one: &[FeatureVector],
    stream: &[FeatureVector],
    schedule: &DriftSchedule,
    config: &BatchForestConfig,
) -> Result<RunResult, EvalError> {
    if stream.is_empty() {
        return Err(EvalError::EmptyStream);
    }
    let start = Instant::now();
    let (model, validation) = train_batch_reference(phase_one, config)?;
    let mut frozen = Frozen(model);
    let mut result = prequential_run(&mut frozen, stream, schedule)?;
    result.wall_seconds = start.elapsed().as_secs_f64();
    result.bandwidth_mbps = throughput(result.bytes_processed, result.wall_seconds);
    result.validation = Some(validation);
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and sample (n - 1) standard deviation.
    pub fn of(values: &[f64]) -> MeanStd {
        if values.windows(2).all(|w| w[0] == w[1]) {
            return MeanStd {
                mean: values.first().copied().unwrap_or(0.0),
                std: 0.0,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        MeanStd { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub learner: String,
    pub runs: usize,
    pub f1: MeanStd,
    pub accuracy: MeanStd,
    pub precision: MeanStd,
    pub recall: MeanStd,
    /// Over the runs where AUC is defined.
    pub auc: Option<MeanStd>,
    pub best_run: usize,
    pub worst_run: usize,
    /// Whether the best F1 lies within mean - 3 std (reported, not enforced).
    pub best_within_band: bool,
    pub drift_events: Vec<Vec<usize>>,
    pub bandwidth_mbps: MeanStd,
}

pub fn aggregate(results: &[RunResult]) -> Result<AggregateResult, EvalError> {
    if results.len() < 2 {
        return Err(EvalError::TooFewRuns(results.len()));
    }
    let pick = |f: fn(&FinalMetrics) -> f64| {
        MeanStd::of(&results.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>())
    };
    let f1 = pick(|m| m.f1);
    let aucs: Vec<f64> = results.iter().filter_map(|r| r.metrics.auc).collect();
    let by_f1 = |a: &&RunResult, b: &&RunResult| a.metrics.f1.total_cmp(&b.metrics.f1);
    let index_of = |r: &RunResult| results.iter().position(|x| std::ptr::eq(x, r)).unwrap_or(0);
    let best = results.iter().max_by(by_f1).map(index_of).unwrap_or(0);
    let worst = results.iter().min_by(by_f1).map(index_of).unwrap_or(0);
    Ok(AggregateResult {
        learner: results[0].learner.clone(),
        runs: results.len(),
        f1,
        accuracy: pick(|m| m.accuracy),
        precision: pick(|m| m.precision),
        recall: pick(|m| m.recall),
        auc: (!aucs.is_empty()).then(|| MeanStd::of(&aucs)),
        best_run: best,
        worst_run: worst,
        best_within_band: results[best].metrics.f1 >= f1.mean - 3.0 * f1.std,
        drift_events: results.iter().map(|r| r.drift_events.clone()).collect(),
        bandwidth_mbps: MeanStd::of(&results.iter().map(|r| r.bandwidth_mbps).collect::<Vec<_>>()),
    })
}

/// Wall-clock dependent fields, kept apart so the rest of a summary is
/// reproducible byte for byte.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
    pub bandwidth_mbps: f64,
}

/// Persisted form of one run (the trace goes to its own CSV).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub learner: String,
    pub repetition: usize,
    pub seed: u64,
    pub samples: usize,
    pub boundaries: Vec<usize>,
    pub metrics: FinalMetrics,
    pub counts: ConfusionCounts,
    pub drift_events: Vec<usize>,
    pub bytes_processed: u64,
    pub validation: Option<Validation>,
    pub config: BTreeMap<String, String>,
    pub timing: Timing,
}

impl RunSummary {
    pub fn new(
        result: &RunResult,
        repetition: usize,
        seed: u64,
        config: BTreeMap<String, String>,
    ) -> Self {
        RunSummary {
            schema_version: SCHEMA_VERSION,
            learner: result.learner.clone(),
            repetition,
            seed,
            samples: result.trace.len(),
            boundaries: result.schedule.boundaries.clone(),
            metrics: result.metrics,
            counts: result.counts,
            drift_events: result.drift_events.clone(),
            bytes_processed: result.bytes_processed,
            validation: result.validation,
            config,
            timing: Timing {
                wall_seconds: result.wall_seconds,
                bandwidth_mbps: result.bandwidth_mbps,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateSummary {
    pub schema_version: u32,
    pub learner: String,
    pub runs: usize,
    pub f1: MeanStd,
    pub accuracy: MeanStd,
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub auc: Option<MeanStd>,
    pub best_run: usize,
    pub worst_run: usize,
    pub best_within_band: bool,
    pub drift_events: Vec<Vec<usize>>,
    pub config: BTreeMap<String, String>,
    pub timing: AggregateTiming,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateTiming {
    pub bandwidth_mbps: MeanStd,
}

impl AggregateSummary {
    pub fn new(agg: &AggregateResult, config: BTreeMap<String, String>) -> Self {
        AggregateSummary {
            schema_version: SCHEMA_VERSION,
            learner: agg.learner.clone(),
            runs: agg.runs,
            f1: agg.f1,
            accuracy: agg.accuracy,
            precision: agg.precision,
            recall: agg.recall,
            auc: agg.auc,
            best_run: agg.best_run,
            worst_run: agg.worst_run,
            best_within_band: agg.best_within_band,
            drift_events: agg.drift_events.clone(),
            config,
            timing: AggregateTiming {
                bandwidth_mbps: agg.bandwidth_mbps,
            },
        }
    }
}
