//! Persisted run configurations.
//!
//! A [`RunConfig`] is the complete parameter document of one invocation.
//! Its SHA-256 over the compact JSON encoding is the config hash embedded in
//! every output. The output directory is deliberately not part of it.

use std::path::{Path, PathBuf};

use pointpe::classifier::TrainConfig;
use pointpe::corruptions::CorruptionKind;
use pointpe::encoders::{EncoderKind, EncoderSpec};
use pointpe::fsutil::read_to_string;
use pointpe::pointcloud::{InstanceVariation, ShapeKind};
use pointpe::pooling::PoolingKind;
use pointpe::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum RunConfig {
    Dataset(DatasetConfig),
    Corrupt(CorruptConfig),
    Train(TrainRunConfig),
    Eval(EvalConfig),
    Register(RegisterConfig),
    Diagnose(DiagnoseConfig),
}

impl RunConfig {
    pub fn name(&self) -> &'static str {
        match self {
            RunConfig::Dataset(_) => "dataset",
            RunConfig::Corrupt(_) => "corrupt",
            RunConfig::Train(_) => "train",
            RunConfig::Eval(_) => "eval",
            RunConfig::Register(_) => "register",
            RunConfig::Diagnose(_) => "diagnose",
        }
    }

    pub fn hash(&self) -> Result<String> {
        let json = serde_json::to_string(self)?;
        Ok(hex(&Sha256::digest(json.as_bytes())))
    }

    pub fn to_pretty_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        serde_json::from_str(&read_to_string(path)?)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Encoder fields shared by several commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderSettings {
    pub kind: EncoderKind,
    pub dim: usize,
    pub scale: f64,
    pub seed: u64,
}

impl EncoderSettings {
    pub fn new(kind: EncoderKind, dim: usize, scale: f64) -> Self {
        Self {
            kind,
            dim,
            scale,
            seed: 0,
        }
    }

    /// Point encoders always take 3D input here.
    pub fn spec(&self) -> EncoderSpec {
        EncoderSpec::new(self.kind, 3, self.dim, self.scale, self.seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    /// `CxN`: the first `C` shape classes with `N` instances each.
    pub synthetic: Option<String>,
    /// Directory of OFF meshes, one subdirectory per class.
    pub off_dir: Option<PathBuf>,
    pub points: usize,
    pub variation: InstanceVariation,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            synthetic: None,
            off_dir: None,
            points: 1024,
            variation: InstanceVariation::SUITE,
            seed: 0,
        }
    }
}

/// Parses `CxN`.
pub fn parse_synthetic(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!("--synthetic expects CLASSESxCOUNT, got {s:?}"));
    let (c, n) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let c: usize = c.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if c < 1 || c > ShapeKind::ALL.len() || n == 0 {
        return Err(Error::Config(format!(
            "--synthetic needs 1..={} classes and at least one instance",
            ShapeKind::ALL.len()
        )));
    }
    Ok((c, n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorruptConfig {
    pub manifest: PathBuf,
    pub corruption: Option<CorruptionKind>,
    pub level: Option<u8>,
    pub param: Option<f64>,
    pub fraction: Option<f64>,
    pub axis: Option<[f64; 3]>,
    pub n_holes: Option<usize>,
    pub seed: u64,
}

impl Default for CorruptConfig {
    fn default() -> Self {
        Self {
            manifest: PathBuf::new(),
            corruption: None,
            level: None,
            param: None,
            fraction: None,
            axis: None,
            n_holes: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainRunConfig {
    pub manifest: PathBuf,
    pub encoder: EncoderSettings,
    pub pooling: PoolingKind,
    pub train: TrainConfig,
}

impl Default for TrainRunConfig {
    fn default() -> Self {
        Self {
            manifest: PathBuf::new(),
            encoder: EncoderSettings::new(EncoderKind::Rff, 1024, 0.9),
            pooling: PoolingKind::Mean,
            train: TrainConfig::default(),
        }
    }
}

/// Which severities to evaluate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelSelection {
    All,
    Levels(Vec<u8>),
    Params(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub checkpoint: PathBuf,
    pub manifest: PathBuf,
    /// `None` evaluates clean data only.
    pub corruption: Option<CorruptionKind>,
    pub levels: LevelSelection,
    pub seed: u64,
    /// When set, the checkpoint's encoder seed must equal this.
    pub encoder_seed: Option<u64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            checkpoint: PathBuf::new(),
            manifest: PathBuf::new(),
            corruption: None,
            levels: LevelSelection::All,
            seed: 0,
            encoder_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegisterConfig {
    /// Source clouds; synthetic instances of `shape` when absent.
    pub manifest: Option<PathBuf>,
    pub shape: ShapeKind,
    pub instances: usize,
    pub points: usize,
    pub data_seed: u64,
    pub encoder: EncoderSettings,
    pub noise: CorruptionKind,
    pub sigmas: Vec<f64>,
    pub poolings: Vec<PoolingKind>,
    pub trials: usize,
    pub max_angle_deg: f64,
    pub max_translation: f64,
    pub success_rotation_deg: f64,
    pub success_translation: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for RegisterConfig {
    fn default() -> Self {
        Self {
            manifest: None,
            shape: ShapeKind::Helix,
            instances: 10,
            points: 256,
            data_seed: 0,
            encoder: EncoderSettings::new(EncoderKind::Rff, 128, 0.5),
            noise: CorruptionKind::GaussianNoise,
            sigmas: (1..=10).map(|k| k as f64 / 100.0).collect(),
            poolings: vec![PoolingKind::Mean, PoolingKind::Max],
            trials: 50,
            max_angle_deg: 30.0,
            max_translation: 0.3,
            success_rotation_deg: 5.0,
            success_translation: 0.05,
            max_iters: 50,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "diagnostic", rename_all = "snake_case")]
pub enum DiagnoseConfig {
    Distance(DistanceDiag),
    Frequency(FrequencyDiag),
    Illustration(IllustrationDiag),
    ScaleSweep(ScaleSweepDiag),
    Robustness(RobustnessDiag),
}

impl DiagnoseConfig {
    pub fn name(&self) -> &'static str {
        match self {
            DiagnoseConfig::Distance(_) => "distance",
            DiagnoseConfig::Frequency(_) => "frequency",
            DiagnoseConfig::Illustration(_) => "illustration",
            DiagnoseConfig::ScaleSweep(_) => "scale_sweep",
            DiagnoseConfig::Robustness(_) => "robustness",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistanceDiag {
    pub encoder: EncoderKind,
    pub dim_in: usize,
    pub dim: usize,
    pub scales: Vec<f64>,
    pub distances: Vec<f64>,
    pub draws: usize,
    pub pairs: usize,
    pub seed: u64,
}

impl Default for DistanceDiag {
    fn default() -> Self {
        Self {
            encoder: EncoderKind::Rff,
            dim_in: 3,
            dim: 256,
            scales: vec![0.1, 0.5, 2.0, 8.0],
            distances: (0..=20).map(|k| k as f64 / 10.0).collect(),
            draws: pointpe::diagnostics::DEFAULT_DRAWS,
            pairs: pointpe::diagnostics::DEFAULT_PAIRS_PER_DRAW,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrequencyDiag {
    pub dims: Vec<usize>,
    pub bandwidth: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for FrequencyDiag {
    fn default() -> Self {
        Self {
            dims: vec![2, 3, 4],
            bandwidth: 8.0,
            samples: 100_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IllustrationDiag {
    pub points: Vec<f64>,
    pub noise: Vec<f64>,
    pub bins: usize,
    pub bandwidth: usize,
    pub grid: usize,
}

impl Default for IllustrationDiag {
    fn default() -> Self {
        Self {
            points: vec![0.2, 0.45, 0.7],
            noise: vec![0.01, 0.05, 0.1],
            bins: 16,
            bandwidth: 16,
            grid: 256,
        }
    }
}

/// Train/test clouds for the classification diagnostics: two manifests, or
/// a generated synthetic suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteData {
    pub train_manifest: Option<PathBuf>,
    pub test_manifest: Option<PathBuf>,
    pub classes: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub points: usize,
    pub variation: InstanceVariation,
    pub seed: u64,
}

impl Default for SuiteData {
    fn default() -> Self {
        Self {
            train_manifest: None,
            test_manifest: None,
            classes: 6,
            train_per_class: 200,
            test_per_class: 100,
            points: 1024,
            variation: InstanceVariation::SUITE,
            seed: 0,
        }
    }
}

/// Head configuration used by the classification diagnostics.
pub fn diagnostic_train_config() -> TrainConfig {
    TrainConfig {
        epochs: 30,
        hidden: [128, 64],
        ..TrainConfig::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaleSweepDiag {
    pub data: SuiteData,
    pub encoder: EncoderKind,
    pub dim: usize,
    pub encoder_seed: u64,
    pub pooling: PoolingKind,
    pub scales: Vec<f64>,
    pub train: TrainConfig,
}

impl Default for ScaleSweepDiag {
    fn default() -> Self {
        Self {
            data: SuiteData::default(),
            encoder: EncoderKind::Rff,
            dim: 256,
            encoder_seed: 0,
            pooling: PoolingKind::Mean,
            scales: vec![0.05, 0.1, 0.5, 1.0, 5.0, 10.0],
            train: diagnostic_train_config(),
        }
    }
}

/// One pooling head and the encoder scale it uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadSetup {
    pub pooling: PoolingKind,
    pub scale: f64,
}

/// One robustness column: a corruption at a level or explicit parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorruptionCell {
    pub kind: CorruptionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobustnessDiag {
    pub data: SuiteData,
    pub encoder: EncoderKind,
    pub dim: usize,
    pub encoder_seed: u64,
    pub heads: Vec<HeadSetup>,
    pub corruptions: Vec<CorruptionCell>,
    pub train: TrainConfig,
    pub seed: u64,
}

impl Default for RobustnessDiag {
    fn default() -> Self {
        let cell = |kind, level| CorruptionCell {
            kind,
            level: Some(level),
            param: None,
        };
        Self {
            data: SuiteData::default(),
            encoder: EncoderKind::Rff,
            dim: 256,
            encoder_seed: 0,
            heads: vec![
                HeadSetup {
                    pooling: PoolingKind::Max,
                    scale: 0.09,
                },
                HeadSetup {
                    pooling: PoolingKind::Mean,
                    scale: 0.9,
                },
                HeadSetup {
                    pooling: PoolingKind::Median,
                    scale: 0.9,
                },
            ],
            corruptions: vec![
                cell(CorruptionKind::BackgroundOutliers, 5),
                cell(CorruptionKind::GaussianNoise, 5),
            ],
            train: diagnostic_train_config(),
            seed: 0,
        }
    }
}
