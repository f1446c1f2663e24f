//! Four-phase drift streams assembled from labeled sample pools, plus a
//! synthetic pool generator for runs without the public datasets.
//!
//! A [`StreamSpec`] lists its phases in canonical order. `direction` decides
//! the emission order; pool draws always happen in canonical order, so a
//! backward build emits the same per-phase samples as the forward build, in
//! reverse phase order and with fresh within-phase shuffles.
//!
//! Spec file format:
//!
//! ```text
//! # comment
//! direction = forward
//! shuffle_seed = 42
//! phase = E1 pool=E1 attack=Malware benign=2369 malicious=3072
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{read_feature_csv, write_feature_csv, FeatureError, FeatureVector};
use crate::parallel::derive_seed;
use crate::{Label, NUM_FEATURES};

pub const PHASE_COUNT: usize = 4;

/// Labeled sample pools keyed by pool id.
pub type Pools = BTreeMap<String, Vec<FeatureVector>>;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("InsufficientPool: pool `{pool_id}` has {available} {class} samples left, phase needs {needed}")]
    InsufficientPool {
        pool_id: String,
        class: Label,
        needed: usize,
        available: usize,
    },
    #[error("unknown pool `{0}`")]
    UnknownPool(String),
    #[error("invalid stream spec: {0}")]
    InvalidSpec(String),
    #[error("spec line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("InvalidDescriptor: {0}")]
    InvalidDescriptor(String),
    #[error("malformed boundaries file: {0}")]
    Boundaries(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Features(#[from] FeatureError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SynthError + '_ {
    move |source| SynthError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseSpec {
    pub name: String,
    pub pool_id: String,
    pub attack_class: String,
    pub benign_count: usize,
    pub malicious_count: usize,
}

impl PhaseSpec {
    pub fn new(
        name: &str,
        attack_class: &str,
        benign_count: usize,
        malicious_count: usize,
    ) -> Self {
        PhaseSpec {
            name: name.to_string(),
            pool_id: name.to_string(),
            attack_class: attack_class.to_string(),
            benign_count,
            malicious_count,
        }
    }

    pub fn len(&self) -> usize {
        self.benign_count + self.malicious_count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn count(&self, label: Label) -> usize {
        match label {
            Label::Benign => self.benign_count,
            Label::Malicious => self.malicious_count,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn flipped(self) -> Direction {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "forward" => Ok(Direction::Forward),
            "backward" => Ok(Direction::Backward),
            other => Err(format!("unknown direction `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamSpec {
    /// Canonical phase order.
    pub phases: Vec<PhaseSpec>,
    pub direction: Direction,
    /// `None` draws a seed from OS entropy.
    pub shuffle_seed: Option<u64>,
}

impl StreamSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.phases.len() != PHASE_COUNT {
            return Err(SynthError::InvalidSpec(format!(
                "expected {PHASE_COUNT} phases, found {}",
                self.phases.len()
            )));
        }
        if let Some(p) = self.phases.iter().find(|p| p.is_empty()) {
            return Err(SynthError::InvalidSpec(format!(
                "phase `{}` has no samples",
                p.name
            )));
        }
        Ok(())
    }

    /// Phases in emission order.
    pub fn ordered_phases(&self) -> Vec<&PhaseSpec> {
        let mut out: Vec<_> = self.phases.iter().collect();
        if self.direction == Direction::Backward {
            out.reverse();
        }
        out
    }

    pub fn total_len(&self) -> usize {
        self.phases.iter().map(PhaseSpec::len).sum()
    }
}

/// Flips the direction, which reverses the emitted phase order.
pub fn reverse_spec(spec: &StreamSpec) -> StreamSpec {
    StreamSpec {
        direction: spec.direction.flipped(),
        ..spec.clone()
    }
}

/// Start indices of phases 2..=4 in the emitted stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DriftSchedule {
    pub boundaries: Vec<usize>,
}

impl DriftSchedule {
    /// Zero-based phase index of a sample.
    pub fn phase_of(&self, index: usize) -> usize {
        self.boundaries.partition_point(|&b| b <= index)
    }

    pub fn check(&self, stream_len: usize) -> Result<(), SynthError> {
        let increasing = self.boundaries.windows(2).all(|w| w[0] < w[1]);
        let in_range = self.boundaries.last().is_none_or(|&b| b < stream_len);
        if increasing && in_range && self.boundaries.first().is_none_or(|&b| b > 0) {
            Ok(())
        } else {
            Err(SynthError::Boundaries(format!(
                "{:?} is not strictly increasing inside a stream of {stream_len}",
                self.boundaries
            )))
        }
    }

    pub fn to_line(&self) -> String {
        let list: Vec<String> = self.boundaries.iter().map(|b| b.to_string()).collect();
        format!("boundaries: {}\n", list.join(","))
    }

    pub fn parse(text: &str) -> Result<DriftSchedule, SynthError> {
        let line = text.trim();
        let rest = line.strip_prefix("boundaries:").ok_or_else(|| {
            SynthError::Boundaries(format!("expected `boundaries: ...`, got `{line}`"))
        })?;
        let boundaries = rest
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<usize>()
                    .map_err(|e| SynthError::Boundaries(format!("`{s}`: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DriftSchedule { boundaries })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuiltStream {
    pub samples: Vec<FeatureVector>,
    pub schedule: DriftSchedule,
    /// Phases in emission order.
    pub phases: Vec<PhaseSpec>,
}

impl BuiltStream {
    /// Samples of one emitted phase.
    pub fn phase(&self, index: usize) -> &[FeatureVector] {
        let start = if index == 0 {
            0
        } else {
            self.schedule.boundaries[index - 1]
        };
        let end = self
            .schedule
            .boundaries
            .get(index)
            .copied()
            .unwrap_or(self.samples.len());
        &self.samples[start..end]
    }
}

/// Draws each phase from its pool without reuse, shuffles within phases and
/// concatenates them in emission order.
pub fn build_stream(spec: &StreamSpec, pools: &Pools) -> Result<BuiltStream, SynthError> {
    spec.validate()?;
    let seed = spec.shuffle_seed.unwrap_or_else(|| rand::rng().random());
    let mut draw_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0, 0));
    // remaining (shuffled) sample indices per (pool, class)
    let mut remaining: HashMap<(&str, Label), Vec<usize>> = HashMap::new();

    let mut drawn: Vec<Vec<FeatureVector>> = Vec::with_capacity(PHASE_COUNT);
    for phase in &spec.phases {
        let pool = pools
            .get(&phase.pool_id)
            .ok_or_else(|| SynthError::UnknownPool(phase.pool_id.clone()))?;
        let mut samples = Vec::with_capacity(phase.len());
        for class in [Label::Benign, Label::Malicious] {
            let left = remaining
                .entry((phase.pool_id.as_str(), class))
                .or_insert_with(|| {
                    let mut idx: Vec<usize> = (0..pool.len())
                        .filter(|&i| pool[i].label == class)
                        .collect();
                    idx.shuffle(&mut draw_rng);
                    idx
                });
            let needed = phase.count(class);
            if needed > left.len() {
                return Err(SynthError::InsufficientPool {
                    pool_id: phase.pool_id.clone(),
                    class,
                    needed,
                    available: left.len(),
                });
            }
            let take = left.split_off(left.len() - needed);
            samples.extend(take.into_iter().map(|i| pool[i].clone()));
        }
        drawn.push(samples);
    }

    let order: Vec<usize> = match spec.direction {
        Direction::Forward => (0..PHASE_COUNT).collect(),
        Direction::Backward => (0..PHASE_COUNT).rev().collect(),
    };
    let direction_tag = match spec.direction {
        Direction::Forward => 1,
        Direction::Backward => 2,
    };
    let mut samples = Vec::with_capacity(spec.total_len());
    let mut boundaries = Vec::with_capacity(PHASE_COUNT - 1);
    let mut phases = Vec::with_capacity(PHASE_COUNT);
    for (pos, &k) in order.iter().enumerate() {
        if pos > 0 {
            boundaries.push(samples.len());
        }
        let mut phase = std::mem::take(&mut drawn[k]);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, direction_tag, k as u64));
        phase.shuffle(&mut rng);
        samples.extend(phase);
        phases.push(spec.phases[k].clone());
    }
    for (i, s) in samples.iter_mut().enumerate() {
        s.window_id = i as u64;
    }
    let schedule = DriftSchedule { boundaries };
    schedule.check(samples.len())?;
    Ok(BuiltStream {
        samples,
        schedule,
        phases,
    })
}

pub fn parse_spec(text: &str) -> Result<StreamSpec, SynthError> {
    let mut phases = Vec::new();
    let mut direction = Direction::Forward;
    let mut shuffle_seed = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |reason: String| SynthError::Parse {
            line: i + 1,
            reason,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("expected `key = value`, got `{line}`")))?;
        let value = value.trim();
        match key.trim() {
            "direction" => direction = value.parse().map_err(bad)?,
            "shuffle_seed" => {
                shuffle_seed = match value {
                    "" | "none" => None,
                    v => Some(v.parse().map_err(|e| bad(format!("shuffle_seed: {e}")))?),
                }
            }
            "phase" => phases.push(parse_phase(value).map_err(bad)?),
            other => return Err(bad(format!("unknown key `{other}`"))),
        }
    }
    let spec = StreamSpec {
        phases,
        direction,
        shuffle_seed,
    };
    spec.validate()?;
    Ok(spec)
}

fn parse_phase(value: &str) -> Result<PhaseSpec, String> {
    let mut tokens = value.split_whitespace();
    let name = tokens.next().ok_or("phase needs a name")?.to_string();
    let mut phase = PhaseSpec {
        pool_id: name.clone(),
        name,
        attack_class: String::new(),
        benign_count: 0,
        malicious_count: 0,
    };
    for tok in tokens {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got `{tok}`"))?;
        let count = || v.parse::<usize>().map_err(|e| format!("{k}: {e}"));
        match k {
            "pool" => phase.pool_id = v.to_string(),
            "attack" => phase.attack_class = v.to_string(),
            "benign" => phase.benign_count = count()?,
            "malicious" => phase.malicious_count = count()?,
            other => return Err(format!("unknown phase field `{other}`")),
        }
    }
    Ok(phase)
}

pub fn format_spec(spec: &StreamSpec) -> String {
    let mut out = format!("direction = {}\n", spec.direction);
    if let Some(seed) = spec.shuffle_seed {
        out.push_str(&format!("shuffle_seed = {seed}\n"));
    }
    for p in &spec.phases {
        out.push_str(&format!("phase = {} pool={}", p.name, p.pool_id));
        if !p.attack_class.is_empty() {
            out.push_str(&format!(" attack={}", p.attack_class));
        }
        out.push_str(&format!(
            " benign={} malicious={}\n",
            p.benign_count, p.malicious_count
        ));
    }
    out
}

pub fn read_spec(path: impl AsRef<Path>) -> Result<StreamSpec, SynthError> {
    let path = path.as_ref();
    parse_spec(&fs::read_to_string(path).map_err(io_err(path))?)
}

/// Path of the boundaries sidecar for a stream CSV.
pub fn boundaries_path(stream_csv: impl AsRef<Path>) -> PathBuf {
    let mut s = stream_csv.as_ref().as_os_str().to_owned();
    s.push(".boundaries");
    PathBuf::from(s)
}

/// Writes the stream as feature CSV and its boundaries sidecar.
pub fn write_stream(path: impl AsRef<Path>, stream: &BuiltStream) -> Result<(), SynthError> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    write_feature_csv(&mut w, &stream.samples)?;
    w.flush().map_err(io_err(path))?;
    let side = boundaries_path(path);
    fs::write(&side, stream.schedule.to_line()).map_err(io_err(&side))?;
    Ok(())
}

/// Reads a stream CSV and its boundaries sidecar.
pub fn read_stream(
    path: impl AsRef<Path>,
) -> Result<(Vec<FeatureVector>, DriftSchedule), SynthError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(io_err(path))?;
    let samples = read_feature_csv(std::io::BufReader::new(file))?;
    let side = boundaries_path(path);
    let schedule = DriftSchedule::parse(&fs::read_to_string(&side).map_err(io_err(&side))?)?;
    schedule.check(samples.len())?;
    Ok((samples, schedule))
}

/// Loads every `<pool_id>.csv` feature file in a directory.
pub fn load_pools(dir: impl AsRef<Path>) -> Result<Pools, SynthError> {
    let dir = dir.as_ref();
    let mut pools = Pools::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("csv") {
            continue;
        }
        let Some(id) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        let file = fs::File::open(&path).map_err(io_err(&path))?;
        pools.insert(
            id.to_string(),
            read_feature_csv(std::io::BufReader::new(file))?,
        );
    }
    Ok(pools)
}

// ---------------------------------------------------------------------------
// synthetic pools

/// Per-class 25-dimensional sampling distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureDistribution {
    /// Independent Gaussians per feature.
    Gaussian { mean: Vec<f64>, std: Vec<f64> },
    /// Independent uniform blocks per feature.
    Uniform { low: Vec<f64>, high: Vec<f64> },
    /// Weighted choice between components.
    Mixture(Vec<(f64, FeatureDistribution)>),
}

impl FeatureDistribution {
    pub fn isotropic(mean: Vec<f64>, std: f64) -> Self {
        let std = vec![std; mean.len()];
        FeatureDistribution::Gaussian { mean, std }
    }

    fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidDescriptor(m));
        match self {
            FeatureDistribution::Gaussian { mean, std } => {
                if mean.len() != NUM_FEATURES || std.len() != NUM_FEATURES {
                    return bad(format!("gaussian needs {NUM_FEATURES} means and stds"));
                }
                if mean.iter().any(|m| !m.is_finite())
                    || std.iter().any(|s| !s.is_finite() || *s < 0.0)
                {
                    return bad("gaussian parameters must be finite with std >= 0".into());
                }
            }
            FeatureDistribution::Uniform { low, high } => {
                if low.len() != NUM_FEATURES || high.len() != NUM_FEATURES {
                    return bad(format!("uniform needs {NUM_FEATURES} bounds per side"));
                }
                if low
                    .iter()
                    .zip(high)
                    .any(|(l, h)| !l.is_finite() || !h.is_finite() || l > h)
                {
                    return bad("uniform bounds must be finite with low <= high".into());
                }
            }
            FeatureDistribution::Mixture(parts) => {
                if parts.is_empty() {
                    return bad("empty mixture".into());
                }
                if parts.iter().any(|(w, _)| !w.is_finite() || *w <= 0.0) {
                    return bad("mixture weights must be positive".into());
                }
                for (_, d) in parts {
                    d.validate()?;
                }
            }
        }
        Ok(())
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self {
            FeatureDistribution::Gaussian { mean, std } => mean
                .iter()
                .zip(std)
                .map(|(&m, &s)| {
                    if s == 0.0 {
                        m
                    } else {
                        Normal::new(m, s).expect("validated").sample(rng)
                    }
                })
                .collect(),
            FeatureDistribution::Uniform { low, high } => low
                .iter()
                .zip(high)
                .map(|(&l, &h)| if l == h { l } else { rng.random_range(l..h) })
                .collect(),
            FeatureDistribution::Mixture(parts) => {
                let total: f64 = parts.iter().map(|(w, _)| w).sum();
                let mut u = rng.random::<f64>() * total;
                for (w, d) in parts {
                    if u < *w {
                        return d.sample(rng);
                    }
                    u -= w;
                }
                parts[parts.len() - 1].1.sample(rng)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDescriptor {
    pub distribution: FeatureDistribution,
    pub count: usize,
    /// Mean raw bytes attributed to one sample; drawn uniformly in
    /// `[0.5, 1.5] * mean_bytes`.
    pub mean_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDescriptor {
    pub pool_id: String,
    pub benign: ClassDescriptor,
    pub malicious: ClassDescriptor,
}

/// Samples labeled pools. Descriptors sharing a pool id append to one pool.
pub fn gen_synthetic_pool(phases: &[PhaseDescriptor], seed: u64) -> Result<Pools, SynthError> {
    for p in phases {
        p.benign.distribution.validate()?;
        p.malicious.distribution.validate()?;
    }
    let mut pools = Pools::new();
    for (k, p) in phases.iter().enumerate() {
        let pool = pools.entry(p.pool_id.clone()).or_default();
        for (class, desc) in [(Label::Benign, &p.benign), (Label::Malicious, &p.malicious)] {
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(seed, k as u64, class.index() as u64));
            for _ in 0..desc.count {
                let features = desc.distribution.sample(&mut rng);
                let bytes = if desc.mean_bytes == 0 {
                    0
                } else {
                    (desc.mean_bytes as f64 * rng.random_range(0.5..1.5)).round() as u64
                };
                let mut v = FeatureVector::new(features, class);
                v.window_id = pool.len() as u64;
                v.byte_count = bytes;
                pool.push(v);
            }
        }
    }
    Ok(pools)
}

/// Parameters of the synthetic drift benchmark family.
///
/// Phase `k` puts its malicious class on its own feature axis
/// (`separation` along feature `AXES[k]`). The benign class of phase `k > 0`
/// sits at `benign_shift` times the previous phase's malicious centre, so
/// what was an attack signature becomes normal traffic and the label
/// relation genuinely changes at every boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftBenchmark {
    pub benign_per_phase: usize,
    pub malicious_per_phase: usize,
    pub separation: f64,
    pub noise_std: f64,
    pub benign_shift: f64,
    pub mean_bytes: u64,
}

impl Default for DriftBenchmark {
    fn default() -> Self {
        DriftBenchmark {
            benign_per_phase: 1000,
            malicious_per_phase: 1000,
            separation: 3.0,
            noise_std: 0.7,
            benign_shift: 0.7,
            mean_bytes: 6000,
        }
    }
}

/// Feature axes carrying the phase signatures (packet count, mean frame
/// length, SYN count, host distinct destination ports).
pub const DRIFT_AXES: [usize; PHASE_COUNT] = [0, 1, 9, 21];

impl DriftBenchmark {
    fn malicious_centre(&self, phase: usize) -> Vec<f64> {
        let mut c = vec![0.0; NUM_FEATURES];
        c[DRIFT_AXES[phase]] = self.separation;
        c
    }

    pub fn descriptors(&self) -> Vec<PhaseDescriptor> {
        (0..PHASE_COUNT)
            .map(|k| {
                let benign_centre = if k == 0 {
                    vec![0.0; NUM_FEATURES]
                } else {
                    self.malicious_centre(k - 1)
                        .into_iter()
                        .map(|v| v * self.benign_shift)
                        .collect()
                };
                PhaseDescriptor {
                    pool_id: format!("P{}", k + 1),
                    benign: ClassDescriptor {
                        distribution: FeatureDistribution::isotropic(benign_centre, self.noise_std),
                        count: self.benign_per_phase,
                        mean_bytes: self.mean_bytes,
                    },
                    malicious: ClassDescriptor {
                        distribution: FeatureDistribution::isotropic(
                            self.malicious_centre(k),
                            self.noise_std,
                        ),
                        count: self.malicious_per_phase,
                        mean_bytes: self.mean_bytes,
                    },
                }
            })
            .collect()
    }

    pub fn spec(&self, shuffle_seed: Option<u64>) -> StreamSpec {
        StreamSpec {
            phases: (0..PHASE_COUNT)
                .map(|k| {
                    PhaseSpec::new(
                        &format!("P{}", k + 1),
                        &format!("attack{}", k + 1),
                        self.benign_per_phase,
                        self.malicious_per_phase,
                    )
                })
                .collect(),
            direction: Direction::Forward,
            shuffle_seed,
        }
    }

    /// Generates pools with `seed` and builds the forward stream.
    pub fn build(&self, seed: u64) -> Result<BuiltStream, SynthError> {
        let pools = gen_synthetic_pool(&self.descriptors(), seed)?;
        build_stream(&self.spec(Some(seed)), &pools)
    }
}

/// Phase table of one of the three mixed datasets (1: Edge + MQTT,
/// 2: MQTT + IoT, 3: Edge + IoT), in canonical order.
pub fn mixed_dataset_spec(dataset: u8, shuffle_seed: Option<u64>) -> Option<StreamSpec> {
    let phases = match dataset {
        1 => vec![
            PhaseSpec::new("E1", "Malware", 2369, 3072),
            PhaseSpec::new("M1", "DoS", 2637, 2610),
            PhaseSpec::new("E2", "DoS", 2263, 2021),
            PhaseSpec::new("M2", "Malware", 2639, 2011),
        ],
        2 => vec![
            PhaseSpec::new("M1", "Malware", 2639, 2011),
            PhaseSpec::new("I1", "InfoGather", 1198, 654),
            PhaseSpec::new("M2", "DoS", 2637, 2610),
            PhaseSpec::new("I2", "Malware", 1021, 346),
        ],
        3 => vec![
            PhaseSpec::new("E1", "Malware", 2369, 3072),
            PhaseSpec::new("I1", "InfoGather", 1198, 654),
            PhaseSpec::new("E2", "DoS", 2263, 2021),
            PhaseSpec::new("I2", "Malware", 1021, 346),
        ],
        _ => return None,
    };
    Some(StreamSpec {
        phases,
        direction: Direction::Forward,
        shuffle_seed,
    })
}

/// Synthetic pools sized exactly for `spec`, one drift-benchmark phase
/// concept per distinct pool id (in first-use order).
pub fn synthetic_pools_for(spec: &StreamSpec, seed: u64) -> Result<Pools, SynthError> {
    let bench = DriftBenchmark::default();
    let concepts = bench.descriptors();
    let mut need: Vec<(String, usize, usize)> = Vec::new();
    for p in &spec.phases {
        match need.iter_mut().find(|(id, _, _)| *id == p.pool_id) {
            Some(n) => {
                n.1 += p.benign_count;
                n.2 += p.malicious_count;
            }
            None => need.push((p.pool_id.clone(), p.benign_count, p.malicious_count)),
        }
    }
    let descriptors: Vec<PhaseDescriptor> = need
        .into_iter()
        .enumerate()
        .map(|(i, (pool_id, benign, malicious))| {
            let concept = &concepts[i % PHASE_COUNT];
            PhaseDescriptor {
                pool_id,
                benign: ClassDescriptor {
                    count: benign,
                    ..concept.benign.clone()
                },
                malicious: ClassDescriptor {
                    count: malicious,
                    ..concept.malicious.clone()
                },
            }
        })
        .collect();
    gen_synthetic_pool(&descriptors, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{GaussianNb, Learner};

    fn table2() -> StreamSpec {
        mixed_dataset_spec(1, Some(7)).unwrap()
    }

    fn class_counts(samples: &[FeatureVector]) -> (usize, usize) {
        let m = samples.iter().filter(|s| s.label.is_malicious()).count();
        (samples.len() - m, m)
    }

    #[test]
    fn table2_forward_lengths_and_boundaries() {
        let spec = table2();
        let pools = synthetic_pools_for(&spec, 1).unwrap();
        let s = build_stream(&spec, &pools).unwrap();
        assert_eq!(s.samples.len(), 19_622);
        assert_eq!(s.schedule.boundaries, vec![5441, 10688, 14972]);
        for (k, p) in spec.phases.iter().enumerate() {
            assert_eq!(
                class_counts(s.phase(k)),
                (p.benign_count, p.malicious_count)
            );
        }
    }

    #[test]
    fn backward_reverses_phases_only() {
        let spec = table2();
        let pools = synthetic_pools_for(&spec, 1).unwrap();
        let fwd = build_stream(&spec, &pools).unwrap();
        let bwd = build_stream(&reverse_spec(&spec), &pools).unwrap();
        let names: Vec<_> = bwd.phases.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, ["M2", "E2", "M1", "E1"]);
        for k in 0..PHASE_COUNT {
            let key =
                |v: &FeatureVector| v.features.iter().map(|f| f.to_bits()).collect::<Vec<_>>();
            let mut a: Vec<_> = fwd.phase(k).iter().map(key).collect();
            let mut b: Vec<_> = bwd.phase(PHASE_COUNT - 1 - k).iter().map(key).collect();
            assert_ne!(a, b, "within-phase order should be re-randomized");
            a.sort();
            b.sort();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn reverse_is_an_involution() {
        let spec = table2();
        assert_eq!(reverse_spec(&reverse_spec(&spec)), spec);
        let names: Vec<_> = reverse_spec(&spec)
            .ordered_phases()
            .iter()
            .map(|p| p.name.clone())
            .collect();
        assert_eq!(names, ["M2", "E2", "M1", "E1"]);
    }

    #[test]
    fn palindrome_spec_content_unchanged() {
        let p = PhaseSpec::new("X", "DoS", 3, 3);
        let spec = StreamSpec {
            phases: vec![p.clone(), p.clone(), p.clone(), p],
            direction: Direction::Forward,
            shuffle_seed: Some(1),
        };
        let r = reverse_spec(&spec);
        let a: Vec<_> = spec.ordered_phases().into_iter().cloned().collect();
        let b: Vec<_> = r.ordered_phases().into_iter().cloned().collect();
        assert_eq!(a, b);
    }

    #[test]
    fn seeded_build_is_deterministic() {
        let spec = table2();
        let pools = synthetic_pools_for(&spec, 3).unwrap();
        assert_eq!(
            build_stream(&spec, &pools).unwrap(),
            build_stream(&spec, &pools).unwrap()
        );
    }

    #[test]
    fn insufficient_pool_reports_shortfall() {
        let mut spec = table2();
        let pools = synthetic_pools_for(&spec, 3).unwrap();
        spec.phases[2].malicious_count += 1;
        match build_stream(&spec, &pools) {
            Err(SynthError::InsufficientPool {
                pool_id,
                class,
                needed,
                available,
            }) => {
                assert_eq!(pool_id, "E2");
                assert_eq!(class, Label::Malicious);
                assert_eq!((needed, available), (2022, 2021));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn shared_pool_is_not_reused_across_phases() {
        let desc = DriftBenchmark {
            benign_per_phase: 10,
            malicious_per_phase: 10,
            ..DriftBenchmark::default()
        };
        let mut d = desc.descriptors();
        d.truncate(1);
        let pools = gen_synthetic_pool(&d, 5).unwrap();
        let phases = (0..4)
            .map(|i| PhaseSpec {
                pool_id: "P1".into(),
                ..PhaseSpec::new(&format!("Q{i}"), "", 2, 2)
            })
            .collect();
        let spec = StreamSpec {
            phases,
            direction: Direction::Forward,
            shuffle_seed: Some(2),
        };
        let s = build_stream(&spec, &pools).unwrap();
        let mut ids: Vec<_> = s.samples.iter().map(|v| v.features[0].to_bits()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 16);
    }

    #[test]
    fn unseeded_builds_still_respect_counts() {
        let mut spec = table2();
        spec.shuffle_seed = None;
        let pools = synthetic_pools_for(&spec, 1).unwrap();
        let s = build_stream(&spec, &pools).unwrap();
        assert_eq!(s.samples.len(), 19_622);
    }

    #[test]
    fn spec_text_round_trip() {
        let spec = table2();
        let text = format_spec(&spec);
        assert!(text.contains("phase = E1 pool=E1 attack=Malware benign=2369 malicious=3072"));
        assert_eq!(parse_spec(&text).unwrap(), spec);
    }

    #[test]
    fn spec_parse_errors() {
        assert!(matches!(
            parse_spec("direction = sideways"),
            Err(SynthError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_spec("phase = A benign=1 malicious=1\n"),
            Err(SynthError::InvalidSpec(_))
        ));
        assert!(matches!(
            parse_spec("\n\nphase = A benign=x"),
            Err(SynthError::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn boundaries_line_round_trip() {
        let s = DriftSchedule {
            boundaries: vec![5441, 10688, 14972],
        };
        assert_eq!(s.to_line(), "boundaries: 5441,10688,14972\n");
        assert_eq!(DriftSchedule::parse(&s.to_line()).unwrap(), s);
        assert_eq!(s.phase_of(0), 0);
        assert_eq!(s.phase_of(5440), 0);
        assert_eq!(s.phase_of(5441), 1);
        assert_eq!(s.phase_of(19_621), 3);
        assert!(s.check(14_972).is_err());
    }

    #[test]
    fn zero_samples_gives_empty_pool() {
        let mut d = DriftBenchmark::default().descriptors();
        for p in &mut d {
            p.benign.count = 0;
            p.malicious.count = 0;
        }
        let pools = gen_synthetic_pool(&d, 1).unwrap();
        assert!(pools.values().all(Vec::is_empty));
    }

    #[test]
    fn same_seed_same_pools() {
        let d = DriftBenchmark::default().descriptors();
        assert_eq!(
            gen_synthetic_pool(&d, 9).unwrap(),
            gen_synthetic_pool(&d, 9).unwrap()
        );
        assert_ne!(
            gen_synthetic_pool(&d, 9).unwrap(),
            gen_synthetic_pool(&d, 10).unwrap()
        );
    }

    #[test]
    fn invalid_descriptor_rejected() {
        let mut d = DriftBenchmark::default().descriptors();
        d[0].benign.distribution = FeatureDistribution::Gaussian {
            mean: vec![0.0; 3],
            std: vec![1.0; 3],
        };
        assert!(matches!(
            gen_synthetic_pool(&d, 1),
            Err(SynthError::InvalidDescriptor(_))
        ));
        d[0].benign.distribution = FeatureDistribution::Mixture(vec![]);
        assert!(matches!(
            gen_synthetic_pool(&d, 1),
            Err(SynthError::InvalidDescriptor(_))
        ));
    }

    #[test]
    fn axis_descriptor_is_separable_within_phase() {
        // malicious mean 2k along axis k, benign at the origin
        for k in 1..=4usize {
            let mut centre = vec![0.0; NUM_FEATURES];
            centre[k - 1] = 2.0 * k as f64;
            let d = PhaseDescriptor {
                pool_id: "x".into(),
                benign: ClassDescriptor {
                    distribution: FeatureDistribution::isotropic(vec![0.0; NUM_FEATURES], 0.25),
                    count: 1000,
                    mean_bytes: 0,
                },
                malicious: ClassDescriptor {
                    distribution: FeatureDistribution::isotropic(centre, 0.25),
                    count: 1000,
                    mean_bytes: 0,
                },
            };
            let pool = &gen_synthetic_pool(&[d], k as u64).unwrap()["x"];
            let mut nb = GaussianNb::new();
            for v in pool {
                nb.learn(&v.features, v.label).unwrap();
            }
            let correct = pool
                .iter()
                .filter(|v| nb.predict(&v.features).label == v.label)
                .count();
            assert!(correct as f64 / pool.len() as f64 > 0.99);
        }
    }

    #[test]
    fn stream_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stream.csv");
        let s = DriftBenchmark {
            benign_per_phase: 20,
            malicious_per_phase: 20,
            ..DriftBenchmark::default()
        }
        .build(4)
        .unwrap();
        write_stream(&path, &s).unwrap();
        let (samples, schedule) = read_stream(&path).unwrap();
        assert_eq!(schedule, s.schedule);
        assert_eq!(samples, s.samples);
        let text = fs::read_to_string(boundaries_path(&path)).unwrap();
        assert_eq!(text, "boundaries: 40,80,120\n");
    }
}
