//! Config-driven repeated runs, feature extraction from captures, and the
//! report table.
//!
//! Experiment config is a flat `key = value` file:
//!
//! ```text
//! learner = arf            # nb | hat | arf | batch-rf
//! seed = 42
//! repetitions = 5
//! aggregate = true
//! scale = false            # online min-max scaling before the learner
//!
//! # stream source, one of:
//! stream = synthetic       # built-in drift benchmark
//! stream = mixed1          # mixed dataset 1/2/3 shape over synthetic pools
//! stream_csv = stream.csv  # feature CSV plus its .boundaries sidecar
//! spec = spec.txt          # with `pools = dir`
//! direction = backward     # optional, for spec and mixed sources
//!
//! synthetic.benign_per_phase = 1000
//! arf.trees = 10
//! tree.grace_period = 200
//! forest.trees = 100
//! ```
//!
//! Relative paths resolve against the config file's directory.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluate::{
    aggregate, batch_reference_run, prequential_run, prequential_run_scaled, AggregateSummary,
    EvalError, RunResult, RunSummary, SCHEMA_VERSION,
};
use crate::features::{write_feature_csv, FeatureExtractor, FeatureVector};
use crate::learners::{
    AdaptiveRandomForest, ArfConfig, Bagging, BatchForestConfig, FeatureSubset, GaussianNb,
    HoeffdingConfig, HoeffdingTree, Learner,
};
use crate::packet::{normalize_timestamps, parse_packet_csv, parse_pcap, IngestError};
use crate::parallel::{derive_seed, Execution};
use crate::synth::{
    build_stream, load_pools, mixed_dataset_spec, read_spec, read_stream, synthetic_pools_for,
    BuiltStream, Direction, DriftBenchmark, SynthError,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearnerKind {
    Nb,
    Hat,
    Arf,
    BatchRf,
}

impl LearnerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LearnerKind::Nb => "nb",
            LearnerKind::Hat => "hat",
            LearnerKind::Arf => "arf",
            LearnerKind::BatchRf => "batch-rf",
        }
    }
}

impl FromStr for LearnerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nb" => Ok(LearnerKind::Nb),
            "hat" => Ok(LearnerKind::Hat),
            "arf" => Ok(LearnerKind::Arf),
            "batch-rf" => Ok(LearnerKind::BatchRf),
            other => Err(format!(
                "unknown learner `{other}` (nb, hat, arf, batch-rf)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StreamSource {
    Synthetic(DriftBenchmark),
    Mixed {
        dataset: u8,
        direction: Direction,
    },
    Spec {
        spec: PathBuf,
        pools: PathBuf,
        direction: Option<Direction>,
    },
    Csv(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub learner: LearnerKind,
    pub seed: u64,
    pub repetitions: usize,
    pub aggregate: bool,
    pub scale: bool,
    pub source: StreamSource,
    pub tree: HoeffdingConfig,
    pub arf: ArfConfig,
    pub forest: BatchForestConfig,
    /// How repetitions are spread over workers.
    pub execution: Execution,
    /// Effective settings, echoed into every summary.
    pub echo: BTreeMap<String, String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            learner: LearnerKind::Arf,
            seed: 0,
            repetitions: 5,
            aggregate: true,
            scale: false,
            source: StreamSource::Synthetic(DriftBenchmark::default()),
            tree: HoeffdingConfig::adaptive(),
            arf: ArfConfig::default(),
            forest: BatchForestConfig::default(),
            execution: Execution::default(),
            echo: BTreeMap::new(),
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| format!("{key}: cannot parse `{value}`: {e}"))
}

fn optional_delta(key: &str, value: &str) -> Result<Option<f64>, String> {
    match value {
        "off" | "none" => Ok(None),
        v => parse_value(key, v).map(Some),
    }
}

impl ExperimentConfig {
    /// Parses config text; `base` resolves relative paths.
    pub fn parse(text: &str, base: &Path) -> Result<ExperimentConfig, ExperimentError> {
        let mut cfg = ExperimentConfig::default();
        let mut bench = DriftBenchmark::default();
        let mut stream: Option<String> = None;
        let mut stream_csv = None;
        let mut spec = None;
        let mut pools = None;
        let mut direction = None;
        let mut echo = BTreeMap::new();

        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| ExperimentError::Config {
                line: i + 1,
                reason,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let path = || base.join(value);
            (|| -> Result<(), String> {
                match key {
                    "learner" => cfg.learner = value.parse()?,
                    "seed" => cfg.seed = parse_value(key, value)?,
                    "repetitions" => cfg.repetitions = parse_value(key, value)?,
                    "aggregate" => cfg.aggregate = parse_value(key, value)?,
                    "scale" => cfg.scale = parse_value(key, value)?,
                    "parallel_repetitions" => {
                        cfg.execution = if parse_value::<bool>(key, value)? {
                            Execution::Parallel
                        } else {
                            Execution::Sequential
                        }
                    }
                    "stream" => stream = Some(value.to_string()),
                    "stream_csv" => stream_csv = Some(path()),
                    "spec" => spec = Some(path()),
                    "pools" => pools = Some(path()),
                    "direction" => direction = Some(value.parse::<Direction>()?),
                    "synthetic.benign_per_phase" => {
                        bench.benign_per_phase = parse_value(key, value)?
                    }
                    "synthetic.malicious_per_phase" => {
                        bench.malicious_per_phase = parse_value(key, value)?
                    }
                    "synthetic.separation" => bench.separation = parse_value(key, value)?,
                    "synthetic.noise_std" => bench.noise_std = parse_value(key, value)?,
                    "synthetic.benign_shift" => bench.benign_shift = parse_value(key, value)?,
                    "synthetic.mean_bytes" => bench.mean_bytes = parse_value(key, value)?,
                    "tree.grace_period" => cfg.tree.grace_period = parse_value(key, value)?,
                    "tree.split_confidence" => cfg.tree.split_confidence = parse_value(key, value)?,
                    "tree.tie_threshold" => cfg.tree.tie_threshold = parse_value(key, value)?,
                    "tree.split_points" => cfg.tree.split_points = parse_value(key, value)?,
                    "tree.drift_delta" => cfg.tree.drift_delta = parse_value(key, value)?,
                    "tree.swap_delta" => cfg.tree.swap_delta = parse_value(key, value)?,
                    "arf.trees" => cfg.arf.trees = parse_value(key, value)?,
                    "arf.lambda" => cfg.arf.bagging = Bagging::Poisson(parse_value(key, value)?),
                    "arf.features" => {
                        cfg.arf.features = match value {
                            "sqrt" => FeatureSubset::Sqrt,
                            "all" => FeatureSubset::All,
                            n => FeatureSubset::Count(parse_value(key, n)?),
                        }
                    }
                    "arf.warning_delta" => cfg.arf.warning_delta = optional_delta(key, value)?,
                    "arf.drift_delta" => cfg.arf.drift_delta = optional_delta(key, value)?,
                    "forest.trees" => cfg.forest.trees = parse_value(key, value)?,
                    "forest.max_features" => {
                        cfg.forest.max_features = Some(parse_value(key, value)?)
                    }
                    "forest.max_depth" => cfg.forest.max_depth = Some(parse_value(key, value)?),
                    "forest.min_samples_leaf" => {
                        cfg.forest.min_samples_leaf = parse_value(key, value)?
                    }
                    "forest.bootstrap" => cfg.forest.bootstrap = parse_value(key, value)?,
                    other => return Err(format!("unknown key `{other}`")),
                }
                Ok(())
            })()
            .map_err(err)?;
            echo.insert(key.to_string(), value.to_string());
        }

        let sources = [stream.is_some(), stream_csv.is_some(), spec.is_some()]
            .iter()
            .filter(|&&s| s)
            .count();
        if sources > 1 {
            return Err(ExperimentError::Invalid(
                "choose one of `stream`, `stream_csv` or `spec`".into(),
            ));
        }
        cfg.source = if let Some(path) = stream_csv {
            StreamSource::Csv(path)
        } else if let Some(spec) = spec {
            let pools = pools
                .ok_or_else(|| ExperimentError::Invalid("`spec` needs `pools = <dir>`".into()))?;
            StreamSource::Spec {
                spec,
                pools,
                direction,
            }
        } else {
            match stream.as_deref().unwrap_or("synthetic") {
                "synthetic" => StreamSource::Synthetic(bench),
                name => {
                    let dataset = name
                        .strip_prefix("mixed")
                        .and_then(|d| d.parse::<u8>().ok())
                        .filter(|d| (1..=3).contains(d))
                        .ok_or_else(|| {
                            ExperimentError::Invalid(format!(
                                "unknown stream `{name}` (synthetic, mixed1, mixed2, mixed3)"
                            ))
                        })?;
                    StreamSource::Mixed {
                        dataset,
                        direction: direction.unwrap_or(Direction::Forward),
                    }
                }
            }
        };
        cfg.echo = echo;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<ExperimentConfig, ExperimentError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| ExperimentError::Config {
            line: 0,
            reason: format!("cannot read {}: {e}", path.display()),
        })?;
        ExperimentConfig::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.echo.insert("seed".into(), seed.to_string());
    }

    pub fn set_repetitions(&mut self, repetitions: usize) {
        self.repetitions = repetitions;
        self.echo
            .insert("repetitions".into(), repetitions.to_string());
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.repetitions == 0 {
            return Err(ExperimentError::Invalid("repetitions must be >= 1".into()));
        }
        if self.arf.trees == 0 || self.forest.trees == 0 {
            return Err(ExperimentError::Invalid("tree counts must be >= 1".into()));
        }
        Ok(())
    }

    /// Settings echoed into summaries: the parsed entries plus the learner
    /// and seed actually used.
    fn echo_for(&self) -> BTreeMap<String, String> {
        let mut echo = self.echo.clone();
        echo.insert("learner".into(), self.learner.as_str().into());
        echo.insert("seed".into(), self.seed.to_string());
        echo.insert("repetitions".into(), self.repetitions.to_string());
        echo
    }

    /// Seed of one repetition.
    pub fn repetition_seed(&self, repetition: usize) -> u64 {
        derive_seed(self.seed, repetition as u64, 0)
    }

    /// Builds the stream of one repetition.
    pub fn build_stream(&self, repetition: usize) -> Result<BuiltStream, ExperimentError> {
        let seed = self.repetition_seed(repetition);
        Ok(match &self.source {
            StreamSource::Synthetic(bench) => bench.build(seed)?,
            StreamSource::Mixed { dataset, direction } => {
                let mut spec = mixed_dataset_spec(*dataset, Some(seed)).ok_or_else(|| {
                    ExperimentError::Invalid(format!("no mixed dataset {dataset}"))
                })?;
                spec.direction = *direction;
                let pools = synthetic_pools_for(&spec, seed)?;
                build_stream(&spec, &pools)?
            }
            StreamSource::Spec {
                spec,
                pools,
                direction,
            } => {
                let mut spec = read_spec(spec)?;
                spec.shuffle_seed = Some(seed);
                if let Some(d) = direction {
                    spec.direction = *d;
                }
                build_stream(&spec, &load_pools(pools)?)?
            }
            StreamSource::Csv(path) => {
                let (samples, schedule) = read_stream(path)?;
                BuiltStream {
                    samples,
                    schedule,
                    phases: Vec::new(),
                }
            }
        })
    }

    /// Fresh learner of one repetition.
    pub fn make_learner(&self, repetition: usize) -> Box<dyn Learner> {
        let seed = self.repetition_seed(repetition);
        match self.learner {
            LearnerKind::Nb => Box::new(GaussianNb::new()),
            LearnerKind::Hat => Box::new(HoeffdingTree::new(HoeffdingConfig {
                adaptive: true,
                seed,
                ..self.tree.clone()
            })),
            LearnerKind::Arf => Box::new(AdaptiveRandomForest::new(ArfConfig {
                seed,
                tree: HoeffdingConfig {
                    adaptive: false,
                    ..self.tree.clone()
                },
                ..self.arf.clone()
            })),
            // trained per run in `run_repetition`
            LearnerKind::BatchRf => Box::new(GaussianNb::new()),
        }
    }
}

/// Runs one repetition: build its stream, then evaluate.
pub fn run_repetition(
    cfg: &ExperimentConfig,
    repetition: usize,
) -> Result<RunResult, ExperimentError> {
    let stream = cfg.build_stream(repetition)?;
    let schedule = &stream.schedule;
    let result = if cfg.learner == LearnerKind::BatchRf {
        let phase_one_end = schedule
            .boundaries
            .first()
            .copied()
            .unwrap_or(stream.samples.len());
        let forest = BatchForestConfig {
            seed: cfg.repetition_seed(repetition),
            ..cfg.forest.clone()
        };
        batch_reference_run(
            &stream.samples[..phase_one_end],
            &stream.samples,
            schedule,
            &forest,
        )?
    } else {
        let mut learner = cfg.make_learner(repetition);
        if cfg.scale {
            prequential_run_scaled(learner.as_mut(), &stream.samples, schedule)?
        } else {
            prequential_run(learner.as_mut(), &stream.samples, schedule)?
        }
    };
    Ok(result)
}

/// Files produced by [`run_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub runs: Vec<RunSummary>,
    pub aggregate: Option<AggregateSummary>,
    pub files: Vec<PathBuf>,
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), ExperimentError> {
    let out = |source| ExperimentError::Output {
        path: path.to_path_buf(),
        source,
    };
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(out)?;
    tmp.write_all(contents).map_err(out)?;
    tmp.flush().map_err(out)?;
    tmp.persist(path).map_err(|e| out(e.error))?;
    Ok(())
}

pub fn run_file_name(learner: &str, repetition: usize) -> String {
    format!("run_{learner}_{repetition:02}.json")
}

pub fn trace_file_name(learner: &str, repetition: usize) -> String {
    format!("trace_{learner}_{repetition:02}.csv")
}

pub fn aggregate_file_name(learner: &str) -> String {
    format!("aggregate_{learner}.json")
}

/// Runs every repetition (in parallel when configured), writes one run JSON
/// and trace CSV per repetition and, if requested, the aggregate JSON.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out_dir: &Path,
) -> Result<ExperimentOutput, ExperimentError> {
    cfg.validate()?;
    if cfg.aggregate && cfg.repetitions < 2 {
        return Err(EvalError::TooFewRuns(cfg.repetitions).into());
    }
    fs::create_dir_all(out_dir).map_err(|source| ExperimentError::Output {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let results = cfg
        .execution
        .map_range(cfg.repetitions, |r| run_repetition(cfg, r))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

    let learner = cfg.learner.as_str();
    let echo = cfg.echo_for();
    let mut files = Vec::new();
    let mut runs = Vec::new();
    for (r, result) in results.iter().enumerate() {
        let summary = RunSummary::new(result, r, cfg.repetition_seed(r), echo.clone());
        let path = out_dir.join(run_file_name(learner, r));
        write_atomic(&path, to_json(&summary).as_bytes())?;
        files.push(path);
        let mut trace = Vec::new();
        result
            .write_trace_csv(&mut trace)
            .expect("writing to memory cannot fail");
        let path = out_dir.join(trace_file_name(learner, r));
        write_atomic(&path, &trace)?;
        files.push(path);
        runs.push(summary);
    }
    let aggregate = if cfg.aggregate {
        let agg = AggregateSummary::new(&aggregate(&results)?, echo);
        let path = out_dir.join(aggregate_file_name(learner));
        write_atomic(&path, to_json(&agg).as_bytes())?;
        files.push(path);
        Some(agg)
    } else {
        None
    };
    Ok(ExperimentOutput {
        runs,
        aggregate,
        files,
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("summaries serialize");
    s.push('\n');
    s
}

/// A summary's JSON with the wall-clock dependent `timing` block removed,
/// for reproducibility comparisons.
pub fn comparable_json(text: &str) -> Result<String, serde_json::Error> {
    let mut value: serde_json::Value = serde_json::from_str(text)?;
    if let Some(obj) = value.as_object_mut() {
        obj.remove("timing");
    }
    serde_json::to_string(&value)
}

// ---------------------------------------------------------------------------
// feature extraction

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtractStats {
    pub packets: usize,
    pub skipped: usize,
    pub windows: usize,
}

const PCAP_MAGICS: [[u8; 4]; 4] = [
    [0xd4, 0xc3, 0xb2, 0xa1],
    [0xa1, 0xb2, 0xc3, 0xd4],
    [0x4d, 0x3c, 0xb2, 0xa1],
    [0xa1, 0xb2, 0x3c, 0x4d],
];

/// Reads a classic pcap or canonical packet CSV. Inputs starting with a pcap
/// magic, or named `*.pcap`, are parsed as pcap; empty inputs hold no packets.
pub fn read_packets(path: &Path) -> Result<(Vec<crate::PacketRecord>, usize), IngestError> {
    let bytes = fs::read(path)?;
    if bytes.is_empty() {
        return Ok((Vec::new(), 0));
    }
    let named_pcap = path.extension().and_then(|e| e.to_str()) == Some("pcap");
    if named_pcap || PCAP_MAGICS.iter().any(|m| bytes.starts_with(m)) {
        let capture = parse_pcap(&bytes)?;
        Ok((capture.packets, capture.skipped))
    } else {
        let mut packets = parse_packet_csv(bytes.as_slice())?;
        normalize_timestamps(&mut packets);
        Ok((packets, 0))
    }
}

/// Packets to feature vectors (one per 1 ms window).
pub fn extract_features(path: &Path) -> Result<(Vec<FeatureVector>, ExtractStats), IngestError> {
    let (packets, skipped) = read_packets(path)?;
    let vectors = FeatureExtractor::new().extract_stream(&packets);
    let stats = ExtractStats {
        packets: packets.len(),
        skipped,
        windows: vectors.len(),
    };
    Ok((vectors, stats))
}

pub fn extract_to_csv(input: &Path, output: &Path) -> Result<ExtractStats, IngestError> {
    let (vectors, stats) = extract_features(input)?;
    let mut buf = Vec::new();
    write_feature_csv(&mut buf, &vectors).map_err(|e| match e {
        crate::features::FeatureError::Io(io) => IngestError::Io(io),
        other => IngestError::Io(std::io::Error::other(other.to_string())),
    })?;
    fs::write(output, buf)?;
    Ok(stats)
}

// ---------------------------------------------------------------------------
// report

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no input files")]
    Empty,
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: not a run or aggregate summary: {reason}")]
    Parse { path: PathBuf, reason: String },
    #[error("{path}: schema version {found}, expected {SCHEMA_VERSION}")]
    Version { path: PathBuf, found: u64 },
}

/// One table row.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub source: String,
    pub learner: String,
    pub runs: usize,
    /// `(mean, std)` for f1, accuracy, precision, recall, auc, Mbps.
    pub cells: [Option<(f64, f64)>; 6],
}

#[derive(Deserialize)]
struct VersionProbe {
    schema_version: Option<u64>,
}

pub fn load_report_row(path: &Path) -> Result<ReportRow, ReportError> {
    let text = fs::read_to_string(path).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let parse = |reason: String| ReportError::Parse {
        path: path.to_path_buf(),
        reason,
    };
    let probe: VersionProbe = serde_json::from_str(&text).map_err(|e| parse(e.to_string()))?;
    match probe.schema_version {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(found) => {
            return Err(ReportError::Version {
                path: path.to_path_buf(),
                found,
            })
        }
        None => return Err(parse("missing schema_version".into())),
    }
    let source = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    if let Ok(agg) = serde_json::from_str::<AggregateSummary>(&text) {
        let ms = |m: crate::evaluate::MeanStd| Some((m.mean, m.std));
        return Ok(ReportRow {
            source,
            learner: agg.learner,
            runs: agg.runs,
            cells: [
                ms(agg.f1),
                ms(agg.accuracy),
                ms(agg.precision),
                ms(agg.recall),
                agg.auc.and_then(ms),
                ms(agg.timing.bandwidth_mbps),
            ],
        });
    }
    let run: RunSummary = serde_json::from_str(&text).map_err(|e| parse(e.to_string()))?;
    let one = |v: f64| Some((v, 0.0));
    Ok(ReportRow {
        source,
        learner: run.learner,
        runs: 1,
        cells: [
            one(run.metrics.f1),
            one(run.metrics.accuracy),
            one(run.metrics.precision),
            one(run.metrics.recall),
            run.metrics.auc.and_then(one),
            one(run.timing.bandwidth_mbps),
        ],
    })
}

/// Table with one row per file: metric means ± standard deviations and Mbps.
pub fn render_report(rows: &[ReportRow]) -> String {
    let headers = ["F1", "Accuracy", "Precision", "Recall", "AUC", "Mbps"];
    let mut out = format!("{:<10} {:>4}", "learner", "runs");
    for h in headers {
        out.push_str(&format!("  {h:<17}"));
    }
    out.push_str("  source\n");
    for row in rows {
        out.push_str(&format!("{:<10} {:>4}", row.learner, row.runs));
        for (i, cell) in row.cells.iter().enumerate() {
            let text = match cell {
                Some((m, s)) if i == 5 => format!("{m:.1} ± {s:.1}"),
                Some((m, s)) => format!("{m:.3} ± {s:.3}"),
                None => "n/a".to_string(),
            };
            out.push_str(&format!("  {text:<17}"));
        }
        out.push_str(&format!("  {}\n", row.source));
    }
    out
}

pub fn report(paths: &[PathBuf]) -> Result<String, ReportError> {
    if paths.is_empty() {
        return Err(ReportError::Empty);
    }
    let rows = paths
        .iter()
        .map(|p| load_report_row(p))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(render_report(&rows))
}
