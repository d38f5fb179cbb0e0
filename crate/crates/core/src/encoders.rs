//! Frozen observation encoders and assembly of the policy input
//! `[features, proprio]`.
//!
//! Encoders are immutable after construction; `encode` is a pure function of
//! the raw observation.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use ndarray::{Array1, Array2, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use crate::envs::{calibration_frames, EnvSpec, ObservationMode, StepResult};
use crate::error::{ensure_finite, Error, Result};

pub const DEFAULT_FEATURE_DIM: usize = 512;
pub const CALIBRATION_FRAMES: usize = 1000;
const MIN_FEATURE_STD: f64 = 1e-6;

/// Identifies a frame by episode and step; rendered as `episode,step`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FrameKey {
    pub episode: u64,
    pub step: u64,
}

impl fmt::Display for FrameKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.episode, self.step)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObsData {
    State(Vec<f64>),
    /// Row-major square grayscale grid with values in `[0, 1]`.
    Pixels { size: usize, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawObservation {
    pub frame: FrameKey,
    pub data: ObsData,
}

impl RawObservation {
    pub fn values(&self) -> &[f64] {
        match &self.data {
            ObsData::State(v) => v,
            ObsData::Pixels { values, .. } => values,
        }
    }
}

pub trait FrozenEncoder: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn feature_dim(&self) -> usize;

    fn encode(&self, raw: &RawObservation) -> Result<Vec<f64>>;

    /// Canonical byte encoding of every parameter, used for the digest.
    fn parameter_bytes(&self) -> Vec<u8>;

    /// Descriptive key/value pairs (provenance, preprocessing, validity).
    fn metadata(&self) -> Vec<(String, String)> {
        Vec::new()
    }

    /// Hex SHA-256 of the parameters.
    fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.name().as_bytes());
        h.update(self.parameter_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn f64_bytes(values: impl IntoIterator<Item = f64>) -> Vec<u8> {
    values.into_iter().flat_map(f64::to_le_bytes).collect()
}

fn check_len(raw: &RawObservation, expected: usize) -> Result<&[f64]> {
    let v = raw.values();
    if v.len() != expected {
        return Err(Error::invalid(format!(
            "raw observation has {} values, encoder expects {expected}",
            v.len()
        )));
    }
    Ok(v)
}

/// Passes the raw vector through unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct Identity {
    dim: usize,
}

impl Identity {
    pub fn new(dim: usize) -> Self {
        Identity { dim }
    }
}

impl FrozenEncoder for Identity {
    fn name(&self) -> &'static str {
        "identity"
    }

    fn feature_dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, raw: &RawObservation) -> Result<Vec<f64>> {
        Ok(check_len(raw, self.dim)?.to_vec())
    }

    fn parameter_bytes(&self) -> Vec<u8> {
        (self.dim as u64).to_le_bytes().to_vec()
    }
}

/// `h = (W x - mu) / sigma` with a fixed Gaussian `W ~ N(0, 1/input_dim)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomProjection {
    seed: u64,
    w: Array2<f64>,
    mu: Array1<f64>,
    sigma: Array1<f64>,
}

impl RandomProjection {
    /// Projection with `mu = 0` and `sigma = 1`.
    pub fn new(seed: u64, input_dim: usize, feature_dim: usize) -> Result<Self> {
        if input_dim == 0 || feature_dim == 0 {
            return Err(Error::invalid("projection dimensions must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (input_dim as f64).sqrt();
        let w = Array2::from_shape_simple_fn((feature_dim, input_dim), || {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * scale
        });
        Ok(RandomProjection {
            seed,
            w,
            mu: Array1::zeros(feature_dim),
            sigma: Array1::ones(feature_dim),
        })
    }

    /// Sets per-feature statistics to the mean and standard deviation of the
    /// raw projections of `frames` (standard deviation floored at 1e-6).
    pub fn calibrated(mut self, frames: &[RawObservation]) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::invalid("calibration needs at least one frame"));
        }
        let d = self.feature_dim();
        let mut sum = Array1::<f64>::zeros(d);
        let mut sum_sq = Array1::<f64>::zeros(d);
        for f in frames {
            let p = self.project(check_len(f, self.input_dim())?);
            sum_sq += &p.mapv(|v| v * v);
            sum += &p;
        }
        let n = frames.len() as f64;
        let mu = sum / n;
        let var = sum_sq / n - mu.mapv(|m| m * m);
        self.sigma = var.mapv(|v| v.max(0.0).sqrt().max(MIN_FEATURE_STD));
        self.mu = mu;
        Ok(self)
    }

    pub fn with_stats(mut self, mu: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        if mu.len() != self.feature_dim() || sigma.len() != self.feature_dim() {
            return Err(Error::invalid("statistics length differs from feature_dim"));
        }
        if sigma.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::invalid("sigma must be positive"));
        }
        self.mu = mu.into();
        self.sigma = sigma.into();
        Ok(self)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn input_dim(&self) -> usize {
        self.w.ncols()
    }

    pub fn mu(&self) -> &[f64] {
        self.mu.as_slice().expect("contiguous")
    }

    pub fn sigma(&self) -> &[f64] {
        self.sigma.as_slice().expect("contiguous")
    }

    fn project(&self, x: &[f64]) -> Array1<f64> {
        self.w.dot(&ArrayView1::from(x))
    }
}

impl FrozenEncoder for RandomProjection {
    fn name(&self) -> &'static str {
        "random_projection"
    }

    fn feature_dim(&self) -> usize {
        self.w.nrows()
    }

    fn encode(&self, raw: &RawObservation) -> Result<Vec<f64>> {
        let x = check_len(raw, self.input_dim())?;
        let p = self.project(x);
        Ok(p.iter()
            .zip(self.mu.iter().zip(self.sigma.iter()))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }

    fn parameter_bytes(&self) -> Vec<u8> {
        let mut out = self.seed.to_le_bytes().to_vec();
        out.extend(f64_bytes(self.w.iter().copied()));
        out.extend(f64_bytes(self.mu.iter().copied()));
        out.extend(f64_bytes(self.sigma.iter().copied()));
        out
    }

    fn metadata(&self) -> Vec<(String, String)> {
        vec![
            ("seed".into(), self.seed.to_string()),
            (
                "calibration".into(),
                format!("first {CALIBRATION_FRAMES} frames of a seeded random-action rollout"),
            ),
        ]
    }
}

/// Average pooling of a square pixel grid by an integer factor.
#[derive(Debug, Clone, PartialEq)]
pub struct Downsample {
    size: usize,
    factor: usize,
}

impl Downsample {
    pub fn new(size: usize, factor: usize) -> Result<Self> {
        if factor == 0 || size == 0 || size % factor != 0 {
            return Err(Error::invalid(format!("pool factor {factor} does not divide frame size {size}")));
        }
        Ok(Downsample { size, factor })
    }
}

impl FrozenEncoder for Downsample {
    fn name(&self) -> &'static str {
        "downsample"
    }

    fn feature_dim(&self) -> usize {
        (self.size / self.factor).pow(2)
    }

    fn encode(&self, raw: &RawObservation) -> Result<Vec<f64>> {
        let x = match &raw.data {
            ObsData::Pixels { size, values } if *size == self.size => values,
            _ => {
                return Err(Error::invalid(format!(
                    "downsample expects a {0}x{0} pixel frame",
                    self.size
                )))
            }
        };
        let out_side = self.size / self.factor;
        let norm = (self.factor * self.factor) as f64;
        let mut out = vec![0.0; out_side * out_side];
        for r in 0..self.size {
            for c in 0..self.size {
                out[(r / self.factor) * out_side + c / self.factor] += x[r * self.size + c];
            }
        }
        out.iter_mut().for_each(|v| *v /= norm);
        Ok(out)
    }

    fn parameter_bytes(&self) -> Vec<u8> {
        let mut out = (self.size as u64).to_le_bytes().to_vec();
        out.extend((self.factor as u64).to_le_bytes());
        out
    }
}

/// Serves externally computed feature vectors by frame key.
#[derive(Debug, Clone, PartialEq)]
pub struct FileFeature {
    dim: usize,
    table: HashMap<FrameKey, Vec<f64>>,
    metadata: Vec<(String, String)>,
}

impl FileFeature {
    pub fn new(dim: usize, rows: impl IntoIterator<Item = (FrameKey, Vec<f64>)>) -> Result<Self> {
        let mut table = HashMap::new();
        for (k, v) in rows {
            if v.len() != dim {
                return Err(Error::invalid(format!("row {k} has {} values, expected {dim}", v.len())));
            }
            if table.insert(k, v).is_some() {
                return Err(Error::invalid(format!("duplicate frame key {k}")));
            }
        }
        Ok(FileFeature {
            dim,
            table,
            metadata: Vec::new(),
        })
    }

    pub fn with_metadata(mut self, metadata: Vec<(String, String)>) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn get(&self, key: &FrameKey) -> Option<&[f64]> {
        self.table.get(key).map(Vec::as_slice)
    }

    fn sorted_keys(&self) -> Vec<FrameKey> {
        let mut keys: Vec<FrameKey> = self.table.keys().copied().collect();
        keys.sort();
        keys
    }

    /// Writes the table in the feature-file format, rows sorted by key.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(fs::File::create(path)?);
        writeln!(out, "feature_dim={}", self.dim)?;
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}={v}")?;
        }
        for key in self.sorted_keys() {
            write!(out, "{key}")?;
            for v in &self.table[&key] {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }
}

impl FrozenEncoder for FileFeature {
    fn name(&self) -> &'static str {
        "file_feature"
    }

    fn feature_dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, raw: &RawObservation) -> Result<Vec<f64>> {
        self.table
            .get(&raw.frame)
            .cloned()
            .ok_or_else(|| Error::MissingFeature(raw.frame.to_string()))
    }

    fn parameter_bytes(&self) -> Vec<u8> {
        let mut out = (self.dim as u64).to_le_bytes().to_vec();
        for key in self.sorted_keys() {
            out.extend(key.episode.to_le_bytes());
            out.extend(key.step.to_le_bytes());
            out.extend(f64_bytes(self.table[&key].iter().copied()));
        }
        out
    }

    fn metadata(&self) -> Vec<(String, String)> {
        self.metadata.clone()
    }
}

/// Reads a feature file: a `feature_dim=<d>` header, optional `# key=value`
/// metadata lines, then rows `episode,step,v_0,...,v_{d-1}`.
pub fn load_feature_table(path: &Path) -> Result<FileFeature> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut dim = None;
    let mut metadata = Vec::new();
    let mut table = HashMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some(d) = dim else {
            let d = line
                .strip_prefix("feature_dim=")
                .and_then(|v| v.trim().parse::<usize>().ok())
                .filter(|d| *d > 0)
                .ok_or_else(|| Error::format(path, lineno, "expected header 'feature_dim=<d>'"))?;
            dim = Some(d);
            continue;
        };
        if let Some(meta) = line.strip_prefix('#') {
            if let Some((k, v)) = meta.trim().split_once('=') {
                metadata.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != d + 2 {
            return Err(Error::format(
                path,
                lineno,
                format!("expected {} fields, found {}", d + 2, fields.len()),
            ));
        }
        let parse_u = |s: &str| s.trim().parse::<u64>().map_err(|e| Error::format(path, lineno, e.to_string()));
        let key = FrameKey {
            episode: parse_u(fields[0])?,
            step: parse_u(fields[1])?,
        };
        let values = fields[2..]
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::format(path, lineno, format!("{s:?}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::format(path, lineno, "non-finite feature value"));
        }
        if table.insert(key, values).is_some() {
            return Err(Error::format(path, lineno, format!("duplicate frame key {key}")));
        }
    }
    let dim = dim.ok_or_else(|| Error::format(path, 1, "missing header 'feature_dim=<d>'"))?;
    Ok(FileFeature { dim, table, metadata })
}

/// Policy input `[features, proprio]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledObservation {
    pub features: Vec<f64>,
    pub proprio: Vec<f64>,
    pub assembled: Vec<f64>,
}

pub fn assemble(encoder: &dyn FrozenEncoder, raw: &RawObservation, proprio: &[f64]) -> Result<AssembledObservation> {
    ensure_finite(proprio, "proprioception")?;
    let features = encoder.encode(raw)?;
    let mut assembled = Vec::with_capacity(features.len() + proprio.len());
    assembled.extend_from_slice(&features);
    assembled.extend_from_slice(proprio);
    Ok(AssembledObservation {
        features,
        proprio: proprio.to_vec(),
        assembled,
    })
}

/// Which encoder to build for a run.
#[derive(Debug, Clone, PartialEq)]
pub enum EncoderSpec {
    Identity,
    RandomProjection { seed: u64, feature_dim: usize },
    Downsample { factor: usize },
    FileFeature { path: PathBuf },
}

impl EncoderSpec {
    /// Builds the encoder for observations of `env`. Random projections are
    /// calibrated on clean frames from a random-action rollout seeded with the
    /// encoder seed.
    pub fn build(&self, env: &EnvSpec) -> Result<Arc<dyn FrozenEncoder>> {
        let raw_len = match env.observation_mode {
            ObservationMode::State => crate::envs::Env::new(env.clone())?.raw_len(),
            ObservationMode::Pixels(n) => n * n,
        };
        Ok(match self {
            EncoderSpec::Identity => Arc::new(Identity::new(raw_len)),
            EncoderSpec::RandomProjection { seed, feature_dim } => {
                let mut clean = env.clone();
                clean.distractors = Default::default();
                let frames = calibration_frames(&clean, CALIBRATION_FRAMES, *seed)?;
                Arc::new(RandomProjection::new(*seed, raw_len, *feature_dim)?.calibrated(&frames)?)
            }
            EncoderSpec::Downsample { factor } => match env.observation_mode {
                ObservationMode::Pixels(n) => Arc::new(Downsample::new(n, *factor)?),
                ObservationMode::State => return Err(Error::invalid("downsample needs pixel observations")),
            },
            EncoderSpec::FileFeature { path } => Arc::new(load_feature_table(path)?),
        })
    }
}

/// Encoder plus assembly policy, with latency accounting.
#[derive(Debug)]
pub struct ObservationPipeline {
    encoder: Arc<dyn FrozenEncoder>,
    append_proprio: bool,
    calls: AtomicU64,
    nanos: AtomicU64,
}

impl ObservationPipeline {
    pub fn new(encoder: Arc<dyn FrozenEncoder>, append_proprio: bool) -> Self {
        ObservationPipeline {
            encoder,
            append_proprio,
            calls: AtomicU64::new(0),
            nanos: AtomicU64::new(0),
        }
    }

    /// Identity on state observations, without proprioception (the state
    /// already contains it).
    pub fn state(dim: usize) -> Self {
        ObservationPipeline::new(Arc::new(Identity::new(dim)), false)
    }

    pub fn encoder(&self) -> &Arc<dyn FrozenEncoder> {
        &self.encoder
    }

    pub fn append_proprio(&self) -> bool {
        self.append_proprio
    }

    pub fn input_dim(&self, proprio_dim: usize) -> usize {
        self.encoder.feature_dim() + if self.append_proprio { proprio_dim } else { 0 }
    }

    pub fn observe(&self, step: &StepResult) -> Result<Vec<f64>> {
        let start = Instant::now();
        let proprio: &[f64] = if self.append_proprio { &step.proprio } else { &[] };
        let out = assemble(self.encoder.as_ref(), &step.raw_observation, proprio)?;
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.nanos.fetch_add(start.elapsed().as_nanos() as u64, Ordering::Relaxed);
        Ok(out.assembled)
    }

    /// Number of encode calls and their total time so far.
    pub fn latency(&self) -> (u64, Duration) {
        (
            self.calls.load(Ordering::Relaxed),
            Duration::from_nanos(self.nanos.load(Ordering::Relaxed)),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert_eq, proptest};
    use rand::Rng;

    fn pixels(size: usize, values: Vec<f64>) -> RawObservation {
        RawObservation {
            frame: FrameKey { episode: 0, step: 0 },
            data: ObsData::Pixels { size, values },
        }
    }

    fn state(values: Vec<f64>) -> RawObservation {
        RawObservation {
            frame: FrameKey { episode: 0, step: 0 },
            data: ObsData::State(values),
        }
    }

    #[test]
    fn identity_passes_through() {
        let e = Identity::new(3);
        assert_eq!(e.encode(&state(vec![1.0, -2.0, 0.5])).unwrap(), vec![1.0, -2.0, 0.5]);
        assert!(matches!(e.encode(&state(vec![1.0])), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn projection_of_zero_image_is_zero() {
        let e = RandomProjection::new(1, 64, 16).unwrap();
        assert_eq!(e.encode(&pixels(8, vec![0.0; 64])).unwrap(), vec![0.0; 16]);
    }

    #[test]
    fn projection_is_reproducible() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let img: Vec<f64> = (0..256).map(|_| rng.random_range(0.0..1.0)).collect();
        let a = RandomProjection::new(42, 256, 512).unwrap();
        let b = RandomProjection::new(42, 256, 512).unwrap();
        assert_eq!(a.encode(&pixels(16, img.clone())).unwrap(), b.encode(&pixels(16, img.clone())).unwrap());
        assert_eq!(a.digest(), b.digest());
        let c = RandomProjection::new(43, 256, 512).unwrap();
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn calibration_standardises_features() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let frames: Vec<RawObservation> = (0..300)
            .map(|_| pixels(4, (0..16).map(|_| rng.random_range(0.0..1.0)).collect()))
            .collect();
        let e = RandomProjection::new(3, 16, 8).unwrap().calibrated(&frames).unwrap();
        let feats: Vec<Vec<f64>> = frames.iter().map(|f| e.encode(f).unwrap()).collect();
        for j in 0..8 {
            let mean = feats.iter().map(|f| f[j]).sum::<f64>() / 300.0;
            let var = feats.iter().map(|f| (f[j] - mean).powi(2)).sum::<f64>() / 300.0;
            assert!(mean.abs() < 1e-9);
            assert!((var - 1.0).abs() < 1e-9);
        }
        // a constant calibration set hits the sigma floor
        let flat = vec![pixels(4, vec![0.5; 16]); 10];
        let e = RandomProjection::new(3, 16, 8).unwrap().calibrated(&flat).unwrap();
        assert!(e.sigma().iter().all(|s| *s == MIN_FEATURE_STD));
    }

    #[test]
    fn downsample_averages_blocks() {
        let e = Downsample::new(4, 2).unwrap();
        let img: Vec<f64> = (0..16).map(|v| v as f64).collect();
        assert_eq!(e.encode(&pixels(4, img)).unwrap(), vec![2.5, 4.5, 10.5, 12.5]);
        assert!(Downsample::new(5, 2).is_err());
        assert!(e.encode(&state(vec![0.0; 16])).is_err());
    }

    #[test]
    fn assemble_puts_features_first() {
        let e = Identity::new(2);
        let a = assemble(&e, &state(vec![1.0, 2.0]), &[3.0]).unwrap();
        assert_eq!(a.assembled, vec![1.0, 2.0, 3.0]);
        let a = assemble(&e, &state(vec![1.0, 2.0]), &[]).unwrap();
        assert_eq!(a.assembled, a.features);
        assert!(assemble(&e, &state(vec![1.0, 2.0]), &[f64::NAN]).is_err());
    }

    #[test]
    fn proprio_noise_only_touches_the_proprio_slice() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let e = RandomProjection::new(5, 16, 6).unwrap();
        let raw = pixels(4, (0..16).map(|_| rng.random_range(0.0..1.0)).collect());
        let proprio = [0.3, -0.7, 1.1, 0.05];
        let noisy: Vec<f64> = proprio
            .iter()
            .map(|p| p * (1.0 + 0.02 * rng.random_range(-1.0..1.0)))
            .collect();
        let clean = assemble(&e, &raw, &proprio).unwrap().assembled;
        let dirty = assemble(&e, &raw, &noisy).unwrap().assembled;
        assert_eq!(clean[..6], dirty[..6]);
        assert!(clean[6..].iter().zip(&dirty[6..]).all(|(a, b)| a != b));
    }

    #[test]
    fn feature_table_lookup_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("features.csv");
        fs::write(&path, "feature_dim=2\n# crop=center 224\n0,0,0.5,-0.5\n0,1,1e-3,2\n").unwrap();
        let table = load_feature_table(&path).unwrap();
        let raw = |episode, step| RawObservation {
            frame: FrameKey { episode, step },
            data: ObsData::State(vec![]),
        };
        assert_eq!(table.encode(&raw(0, 0)).unwrap(), vec![0.5, -0.5]);
        assert!(matches!(table.encode(&raw(3, 0)), Err(Error::MissingFeature(_))));
        assert_eq!(table.metadata(), vec![("crop".to_string(), "center 224".to_string())]);

        let again = dir.path().join("again.csv");
        table.write(&again).unwrap();
        let reloaded = load_feature_table(&again).unwrap();
        assert_eq!(reloaded, table);
        assert_eq!(reloaded.digest(), table.digest());
    }

    #[test]
    fn feature_table_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        let cases = [
            ("feature_dim=2\n0,0,1,2\n0,0,3,4\n", 3, "duplicate"),
            ("feature_dim=2\n0,0,1,2\n0,1,x,4\n", 3, "\"x\""),
            ("feature_dim=2\n0,0,1\n", 2, "fields"),
            ("dim=2\n", 1, "header"),
        ];
        for (text, line, needle) in cases {
            fs::write(&path, text).unwrap();
            match load_feature_table(&path) {
                Err(Error::Format { line: l, msg, .. }) => {
                    assert_eq!(l, line, "{text}");
                    assert!(msg.contains(needle), "{msg}");
                }
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn large_generated_table_serves_all_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("big.csv");
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let rows: Vec<(FrameKey, Vec<f64>)> = (0..1000u64)
            .map(|i| {
                (
                    FrameKey { episode: i / 100, step: i % 100 },
                    (0..512).map(|_| rng.random_range(-3.0..3.0)).collect(),
                )
            })
            .collect();
        let table = FileFeature::new(512, rows.clone()).unwrap();
        table.write(&path).unwrap();
        let loaded = load_feature_table(&path).unwrap();
        assert_eq!(loaded.len(), 1000);
        for (k, v) in &rows {
            assert_eq!(loaded.get(k).unwrap(), v.as_slice());
        }
    }

    proptest! {
        #[test]
        fn encode_is_pure(seed in 0u64..1000, fill in 0.0f64..1.0) {
            let e = RandomProjection::new(seed, 16, 4).unwrap();
            let raw = pixels(4, vec![fill; 16]);
            let first = e.encode(&raw).unwrap();
            prop_assert_eq!(first, e.encode(&raw).unwrap());
        }
    }
}
