//! Command-line flags. Every flag is optional and overrides the value from
//! `--config` (a persisted `run_config.json`), which in turn overrides the
//! documented default.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use pointpe::classifier::TrainConfig;
use pointpe::corruptions::CorruptionKind;
use pointpe::encoders::EncoderKind;
use pointpe::pointcloud::ShapeKind;
use pointpe::pooling::PoolingKind;
use pointpe::{Error, Result};

use crate::config::*;

#[derive(Debug, Parser)]
#[command(
    name = "pointpe",
    version,
    about = "Analytical point embeddings: datasets, corruption, training, evaluation, registration and diagnostics",
    after_help = "Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical failure.\n\
Outputs go to --out-dir, else $POINTPE_OUT_DIR, else ./pointpe-out. Each run writes \
run_config.json; `pointpe run <run_config.json>` re-executes it."
)]
pub struct Cli {
    /// Worker threads [default: all cores]. Results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    /// Output directory [default: $POINTPE_OUT_DIR or ./pointpe-out].
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic shapes or sample OFF meshes into XYZ files plus a
    /// manifest. Writes clouds/*.xyz, manifest.json, classes.json.
    Dataset(DatasetArgs),
    /// Apply one corruption to every cloud of a manifest. Writes
    /// clouds/*.xyz, manifest.json, classes.json.
    Corrupt(CorruptArgs),
    /// Train a classifier head on frozen encoder features. Writes
    /// checkpoint.json and training_curve.csv (epoch, learning_rate, loss,
    /// train_accuracy).
    Train(TrainArgs),
    /// Evaluate a checkpoint on clean or corrupted data. Writes eval.csv
    /// (corruption, level, severity, pooling, scale, samples, accuracy,
    /// error_rate), one row per severity.
    Eval(EvalArgs),
    /// Feature-space registration sweep over noise levels. Writes
    /// register.csv (pooling, noise, sigma, trials, successes, success_rate,
    /// mean_rot_err_deg, mean_trans_err) and register.svg.
    Register(RegisterArgs),
    /// Analysis artifacts (CSV plus SVG).
    #[command(subcommand)]
    Diagnose(DiagnoseCommand),
    /// Re-execute a persisted run_config.json.
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// A run_config.json written by an earlier run.
    pub config: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    /// Start from this run_config.json; other flags override its values.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

// aliases keep clap from treating these as repeated flags
type Floats = Vec<f64>;
type Usizes = Vec<usize>;
type Poolings = Vec<PoolingKind>;
type Heads = Vec<HeadSetup>;
type Cells = Vec<CorruptionCell>;

fn list<T: std::str::FromStr>(s: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .filter(|x| !x.trim().is_empty())
        .map(|x| x.trim().parse::<T>().map_err(|e| format!("{x:?}: {e}")))
        .collect()
}

/// `a,b,c` or an inclusive range `start:stop:step`.
pub fn parse_float_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 1 {
        return list::<f64>(s);
    }
    if parts.len() != 3 {
        return Err(format!("expected a,b,c or start:stop:step, got {s:?}"));
    }
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    let (a, b, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
    if !(step > 0.0) || b < a {
        return Err(format!("range {s:?} needs a positive step and start <= stop"));
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    // snap to 12 decimals so 0.01:0.1:0.01 yields 0.03, not 0.030000000000000002
    Ok((0..=n).map(|i| ((a + i as f64 * step) * 1e12).round() / 1e12).collect())
}

fn parse_poolings(s: &str) -> std::result::Result<Vec<PoolingKind>, String> {
    list(s)
}

fn parse_usizes(s: &str) -> std::result::Result<Vec<usize>, String> {
    list(s)
}

fn parse_hidden(s: &str) -> std::result::Result<[usize; 2], String> {
    let v: Vec<usize> = list(s)?;
    <[usize; 2]>::try_from(v).map_err(|_| format!("expected two widths A,B, got {s:?}"))
}

fn parse_axis(s: &str) -> std::result::Result<[f64; 3], String> {
    let v: Vec<f64> = list(s)?;
    <[f64; 3]>::try_from(v).map_err(|_| format!("expected X,Y,Z, got {s:?}"))
}

/// `none` or a corruption name.
fn parse_corruption(s: &str) -> std::result::Result<Option<CorruptionKind>, String> {
    if s == "none" {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|e: Error| e.to_string())
}

/// `all` or a comma list of levels.
fn parse_levels(s: &str) -> std::result::Result<LevelSelection, String> {
    if s == "all" {
        return Ok(LevelSelection::All);
    }
    list::<u8>(s).map(LevelSelection::Levels)
}

/// `kind:level` or `kind=param`.
fn parse_cells(s: &str) -> std::result::Result<Vec<CorruptionCell>, String> {
    s.split(',')
        .map(|item| {
            let item = item.trim();
            let (kind, level, param) = if let Some((k, l)) = item.split_once(':') {
                (k, Some(l.parse::<u8>().map_err(|e| format!("{item:?}: {e}"))?), None)
            } else if let Some((k, p)) = item.split_once('=') {
                (k, None, Some(p.parse::<f64>().map_err(|e| format!("{item:?}: {e}"))?))
            } else {
                return Err(format!("expected kind:level or kind=param, got {item:?}"));
            };
            Ok(CorruptionCell {
                kind: kind.parse().map_err(|e: Error| e.to_string())?,
                level,
                param,
            })
        })
        .collect()
}

/// `pool:scale` pairs.
fn parse_heads(s: &str) -> std::result::Result<Vec<HeadSetup>, String> {
    s.split(',')
        .map(|item| {
            let (p, sc) = item
                .trim()
                .split_once(':')
                .ok_or_else(|| format!("expected pool:scale, got {item:?}"))?;
            Ok(HeadSetup {
                pooling: p.parse().map_err(|e: Error| e.to_string())?,
                scale: sc.parse().map_err(|e| format!("{item:?}: {e}"))?,
            })
        })
        .collect()
}

/// Loads `--config` and checks it is for the expected command.
fn base<T>(path: &Option<PathBuf>, extract: impl Fn(RunConfig) -> Option<T>, default: T, what: &str) -> Result<T> {
    match path {
        None => Ok(default),
        Some(p) => {
            let cfg = RunConfig::load(p)?;
            let name = cfg.name();
            extract(cfg).ok_or_else(|| {
                Error::Config(format!("{} holds a {name} config, not {what}", p.display()))
            })
        }
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Synthetic suite CLASSESxCOUNT, e.g. 6x200 (classes in order sphere,
    /// cube, torus, cylinder, cone, helix).
    #[arg(long, value_name = "CxN")]
    pub synthetic: Option<String>,
    /// Directory of OFF meshes laid out as <dir>/<class>/*.off.
    #[arg(long, value_name = "DIR")]
    pub off_dir: Option<PathBuf>,
    /// Points per cloud [default: 1024].
    #[arg(long)]
    pub points: Option<usize>,
    /// Seed for sampling [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Synthetic only: disable random orientation [default: random].
    #[arg(long)]
    pub no_rotation: bool,
    /// Synthetic only: per-axis scale drawn from [1-a, 1+a] [default: 0.1].
    #[arg(long, value_name = "A")]
    pub anisotropy: Option<f64>,
    /// Synthetic only: Gaussian jitter std in unit-ball units [default: 0].
    #[arg(long, value_name = "SIGMA")]
    pub jitter: Option<f64>,
}

impl DatasetArgs {
    pub fn resolve(self) -> Result<DatasetConfig> {
        let extract = |c| match c {
            RunConfig::Dataset(d) => Some(d),
            _ => None,
        };
        let mut c = base(&self.config.config, extract, DatasetConfig::default(), "dataset")?;
        if self.synthetic.is_some() {
            c.synthetic = self.synthetic;
            c.off_dir = None;
        }
        if self.off_dir.is_some() {
            c.off_dir = self.off_dir;
            c.synthetic = None;
        }
        set(&mut c.points, self.points);
        set(&mut c.seed, self.seed);
        if self.no_rotation {
            c.variation.random_rotation = false;
        }
        set(&mut c.variation.anisotropy, self.anisotropy);
        set(&mut c.variation.jitter, self.jitter);
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct CorruptArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Input manifest (required).
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    /// Corruption kind: uniform_noise, gaussian_noise, impulse_noise,
    /// upsampling_outliers, background_outliers, ball_outliers, rotation,
    /// shear, cutout, density_decrease (short aliases uniform, gaussian,
    /// impulse, upsampling, background, ball).
    #[arg(long, value_name = "KIND")]
    pub corruption: Option<String>,
    /// Severity level 1-10 (kinds with a ladder).
    #[arg(long)]
    pub level: Option<u8>,
    /// Explicit parameter instead of a level: noise std or half-width,
    /// outlier fraction, ball radius, rotation angle (radians), shear factor,
    /// cutout hole size (points) or density keep fraction.
    #[arg(long)]
    pub param: Option<f64>,
    /// Ball outliers: appended fraction of N [default: 0.1].
    #[arg(long)]
    pub fraction: Option<f64>,
    /// Rotation axis X,Y,Z [default: random per cloud].
    #[arg(long, value_parser = parse_axis, value_name = "X,Y,Z")]
    pub axis: Option<[f64; 3]>,
    /// Cutout: number of holes [default: 1].
    #[arg(long)]
    pub n_holes: Option<usize>,
    /// Seed; cloud i uses a stream derived from (seed, i) [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
}

impl CorruptArgs {
    pub fn resolve(self) -> Result<CorruptConfig> {
        let extract = |c| match c {
            RunConfig::Corrupt(d) => Some(d),
            _ => None,
        };
        let mut c = base(&self.config.config, extract, CorruptConfig::default(), "corrupt")?;
        set(&mut c.manifest, self.manifest);
        if let Some(k) = self.corruption {
            c.corruption = Some(k.parse()?);
        }
        if self.level.is_some() {
            c.level = self.level;
            c.param = None;
        }
        if self.param.is_some() {
            c.param = self.param;
            c.level = None;
        }
        if self.fraction.is_some() {
            c.fraction = self.fraction;
        }
        if self.axis.is_some() {
            c.axis = self.axis;
        }
        if self.n_holes.is_some() {
            c.n_holes = self.n_holes;
        }
        set(&mut c.seed, self.seed);
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct EncoderArgs {
    /// Encoder kind: rff, relu_mlp, rff_attention, gaussian_pe,
    /// sinusoid_grid.
    #[arg(long, value_name = "KIND")]
    pub encoder: Option<EncoderKind>,
    /// Embedding dimension K.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Encoder scale (RFF: std of the frequency matrix, in 1/unit-ball
    /// units).
    #[arg(long)]
    pub scale: Option<f64>,
    /// Seed of the encoder's random weights [default: 0].
    #[arg(long)]
    pub encoder_seed: Option<u64>,
}

impl EncoderArgs {
    fn apply(self, e: &mut EncoderSettings) {
        set(&mut e.kind, self.encoder);
        set(&mut e.dim, self.dim);
        set(&mut e.scale, self.scale);
        set(&mut e.seed, self.encoder_seed);
    }
}

#[derive(Debug, Args)]
pub struct TrainFlags {
    /// Training epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Mini-batch size.
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Initial learning rate [default: 0.1].
    #[arg(long)]
    pub lr: Option<f64>,
    /// Final learning rate of the cosine schedule [default: 0.001].
    #[arg(long)]
    pub min_lr: Option<f64>,
    /// SGD momentum [default: 0.9].
    #[arg(long)]
    pub momentum: Option<f64>,
    /// L2 weight decay [default: 0.0001].
    #[arg(long)]
    pub weight_decay: Option<f64>,
    /// Dropout probability before the second BN [default: 0.4].
    #[arg(long)]
    pub dropout: Option<f64>,
    /// Hidden widths A,B.
    #[arg(long, value_parser = parse_hidden, value_name = "A,B")]
    pub hidden: Option<[usize; 2]>,
    /// Random per-axis scaling augmentation in [2/3, 3/2].
    #[arg(long)]
    pub augment_scale: bool,
    /// Random translation augmentation in [-0.2, 0.2].
    #[arg(long)]
    pub augment_translate: bool,
    /// Keep the moving-average BN statistics instead of recomputing them on
    /// the training set after the last epoch.
    #[arg(long)]
    pub no_bn_recalibration: bool,
    /// Seed for initialization, shuffling, dropout and augmentation
    /// [default: 0].
    #[arg(long)]
    pub train_seed: Option<u64>,
}

impl TrainFlags {
    fn apply(self, t: &mut TrainConfig) {
        set(&mut t.epochs, self.epochs);
        set(&mut t.batch_size, self.batch_size);
        set(&mut t.learning_rate, self.lr);
        set(&mut t.min_learning_rate, self.min_lr);
        set(&mut t.momentum, self.momentum);
        set(&mut t.weight_decay, self.weight_decay);
        set(&mut t.dropout, self.dropout);
        set(&mut t.hidden, self.hidden);
        set(&mut t.seed, self.train_seed);
        if self.augment_scale {
            t.augmentation.random_scale = true;
        }
        if self.augment_translate {
            t.augmentation.random_translate = true;
        }
        if self.no_bn_recalibration {
            t.recalibrate_bn = false;
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Training manifest (required).
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    /// Encoder [defaults: rff, --dim 1024, --scale 0.9].
    #[command(flatten)]
    pub encoder: EncoderArgs,
    /// Pooling: max, mean, median, sum [default: mean].
    #[arg(long, value_name = "POOL")]
    pub pool: Option<PoolingKind>,
    /// Head training [defaults: 50 epochs, batch 32, hidden 512,256].
    #[command(flatten)]
    pub train: TrainFlags,
}

impl TrainArgs {
    pub fn resolve(self) -> Result<TrainRunConfig> {
        let extract = |c| match c {
            RunConfig::Train(d) => Some(d),
            _ => None,
        };
        let mut c = base(&self.config.config, extract, TrainRunConfig::default(), "train")?;
        set(&mut c.manifest, self.manifest);
        self.encoder.apply(&mut c.encoder);
        set(&mut c.pooling, self.pool);
        self.train.apply(&mut c.train);
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// checkpoint.json from `train` (required).
    #[arg(long, value_name = "FILE")]
    pub checkpoint: Option<PathBuf>,
    /// Test manifest (required).
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    /// Corruption kind or `none` for a single clean row [default: none].
    #[arg(long, value_name = "KIND|none")]
    pub corruption: Option<String>,
    /// `all` (levels 1-10) or a comma list of levels [default: all].
    #[arg(long, value_parser = parse_levels, value_name = "all|L,L,..")]
    pub levels: Option<LevelSelection>,
    /// Explicit parameters instead of levels: a,b,c or start:stop:step.
    #[arg(long, value_parser = parse_float_list, value_name = "LIST")]
    pub params: Option<Floats>,
    /// Corruption seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Reject the checkpoint unless its encoder seed equals this.
    #[arg(long)]
    pub encoder_seed: Option<u64>,
}

impl EvalArgs {
    pub fn resolve(self) -> Result<EvalConfig> {
        let extract = |c| match c {
            RunConfig::Eval(d) => Some(d),
            _ => None,
        };
        let mut c = base(&self.config.config, extract, EvalConfig::default(), "eval")?;
        set(&mut c.checkpoint, self.checkpoint);
        set(&mut c.manifest, self.manifest);
        if let Some(k) = self.corruption {
            c.corruption = parse_corruption(&k).map_err(Error::Config)?;
        }
        set(&mut c.levels, self.levels);
        if let Some(p) = self.params {
            c.levels = LevelSelection::Params(p);
        }
        set(&mut c.seed, self.seed);
        if self.encoder_seed.is_some() {
            c.encoder_seed = self.encoder_seed;
        }
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct RegisterArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Source clouds [default: synthetic instances of --shape].
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    /// Synthetic source shape [default: helix].
    #[arg(long)]
    pub shape: Option<ShapeKind>,
    /// Synthetic source instances [default: 10].
    #[arg(long)]
    pub instances: Option<usize>,
    /// Points per synthetic source [default: 256].
    #[arg(long)]
    pub points: Option<usize>,
    /// Seed for synthetic sources [default: 0].
    #[arg(long)]
    pub data_seed: Option<u64>,
    /// Encoder [defaults: rff, --dim 128, --scale 0.5].
    #[command(flatten)]
    pub encoder: EncoderArgs,
    /// Target noise kind: gaussian or uniform [default: gaussian].
    #[arg(long, value_name = "KIND")]
    pub noise: Option<String>,
    /// Noise levels in unit-ball units, a,b,c or start:stop:step
    /// [default: 0.01:0.1:0.01].
    #[arg(long, value_parser = parse_float_list, value_name = "LIST")]
    pub sigmas: Option<Floats>,
    /// Comma list of poolings [default: mean,max].
    #[arg(long, value_parser = parse_poolings, value_name = "POOLS")]
    pub pool: Option<Poolings>,
    /// Trials per (pooling, sigma) [default: 50].
    #[arg(long)]
    pub trials: Option<usize>,
    /// Largest initial rotation in degrees [default: 30].
    #[arg(long)]
    pub max_angle_deg: Option<f64>,
    /// Largest initial translation per axis [default: 0.3].
    #[arg(long)]
    pub max_translation: Option<f64>,
    /// Success: rotation error below this many degrees [default: 5].
    #[arg(long)]
    pub success_rotation_deg: Option<f64>,
    /// Success: translation error below this [default: 0.05].
    #[arg(long)]
    pub success_translation: Option<f64>,
    /// Solver iteration cap [default: 50].
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Seed for poses and noise [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
}

impl RegisterArgs {
    pub fn resolve(self) -> Result<RegisterConfig> {
        let extract = |c| match c {
            RunConfig::Register(d) => Some(d),
            _ => None,
        };
        let mut c = base(&self.config.config, extract, RegisterConfig::default(), "register")?;
        if self.manifest.is_some() {
            c.manifest = self.manifest;
        }
        set(&mut c.shape, self.shape);
        set(&mut c.instances, self.instances);
        set(&mut c.points, self.points);
        set(&mut c.data_seed, self.data_seed);
        self.encoder.apply(&mut c.encoder);
        if let Some(n) = self.noise {
            let kind: CorruptionKind = n.parse()?;
            if !matches!(kind, CorruptionKind::GaussianNoise | CorruptionKind::UniformNoise) {
                return Err(Error::Config(format!("--noise must be gaussian or uniform, got {n}")));
            }
            c.noise = kind;
        }
        set(&mut c.sigmas, self.sigmas);
        set(&mut c.poolings, self.pool);
        set(&mut c.trials, self.trials);
        set(&mut c.max_angle_deg, self.max_angle_deg);
        set(&mut c.max_translation, self.max_translation);
        set(&mut c.success_rotation_deg, self.success_rotation_deg);
        set(&mut c.success_translation, self.success_translation);
        set(&mut c.max_iters, self.max_iters);
        set(&mut c.seed, self.seed);
        Ok(c)
    }
}

#[derive(Debug, Subcommand)]
pub enum DiagnoseCommand {
    /// Mean squared encoding distance against point distance. Writes
    /// distance.csv (scale, d, mean_sq, std_sq, mean_dist, samples,
    /// rff_oracle) and distance.svg.
    Distance(DistanceArgs),
    /// Sums of D uniforms on [-B, B] against N(0, DB^2/3). Writes
    /// frequency.csv, one row per D.
    Frequency(FrequencyArgs),
    /// Impulse and sinc embeddings of a 1D cloud, clean and shifted. Writes
    /// illustration_curves.csv, illustration_gaps.csv, illustration.svg.
    Illustration(IllustrationArgs),
    /// Train/test accuracy against encoder scale. Writes scale_sweep.csv
    /// (scale, train_acc, test_acc) and scale_sweep.svg.
    ScaleSweep(ScaleSweepArgs),
    /// Error rate per pooling head under corruptions. Writes robustness.csv
    /// (corruption, level, severity, pooling, scale, error_rate) and
    /// robustness.svg.
    Robustness(RobustnessArgs),
}

fn diag_base<T>(
    path: &Option<PathBuf>,
    extract: impl Fn(DiagnoseConfig) -> Option<T>,
    default: T,
    what: &str,
) -> Result<T> {
    base(
        path,
        |c| match c {
            RunConfig::Diagnose(d) => extract(d),
            _ => None,
        },
        default,
        what,
    )
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Encoder kind [default: rff].
    #[arg(long, value_name = "KIND")]
    pub encoder: Option<EncoderKind>,
    /// Input dimension; 1 for impulse and sinc1d [default: 3].
    #[arg(long)]
    pub dim_in: Option<usize>,
    /// Embedding dimension [default: 256].
    #[arg(long)]
    pub dim: Option<usize>,
    /// Encoder scales, a,b,c or start:stop:step [default: 0.1,0.5,2,8].
    #[arg(long, value_parser = parse_float_list, value_name = "LIST")]
    pub scales: Option<Floats>,
    /// Point distances in input units [default: 0:2:0.1].
    #[arg(long, value_parser = parse_float_list, value_name = "LIST")]
    pub distances: Option<Floats>,
    /// Encoder redraws [default: 50].
    #[arg(long)]
    pub draws: Option<usize>,
    /// Point pairs per redraw and distance [default: 8].
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
}

impl DistanceArgs {
    pub fn resolve(self) -> Result<DistanceDiag> {
        let extract = |d| match d {
            DiagnoseConfig::Distance(x) => Some(x),
            _ => None,
        };
        let mut c = diag_base(&self.config.config, extract, DistanceDiag::default(), "diagnose distance")?;
        set(&mut c.encoder, self.encoder);
        set(&mut c.dim_in, self.dim_in);
        set(&mut c.dim, self.dim);
        set(&mut c.scales, self.scales);
        set(&mut c.distances, self.distances);
        set(&mut c.draws, self.draws);
        set(&mut c.pairs, self.pairs);
        set(&mut c.seed, self.seed);
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct FrequencyArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Comma list of dimensions D [default: 2,3,4].
    #[arg(long, value_parser = parse_usizes, value_name = "LIST")]
    pub dims: Option<Usizes>,
    /// Per-axis frequency bound B [default: 8].
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Monte Carlo samples, at least 10000 [default: 100000].
    #[arg(long)]
    pub samples: Option<usize>,
    /// Seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
}

impl FrequencyArgs {
    pub fn resolve(self) -> Result<FrequencyDiag> {
        let extract = |d| match d {
            DiagnoseConfig::Frequency(x) => Some(x),
            _ => None,
        };
        let mut c = diag_base(&self.config.config, extract, FrequencyDiag::default(), "diagnose frequency")?;
        set(&mut c.dims, self.dims);
        set(&mut c.bandwidth, self.bandwidth);
        set(&mut c.samples, self.samples);
        set(&mut c.seed, self.seed);
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct IllustrationArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// 1D points in (0, 1) [default: 0.2,0.45,0.7].
    #[arg(long, value_parser = parse_float_list, value_name = "LIST")]
    pub points: Option<Floats>,
    /// Shifts applied to every point; empty for clean only
    /// [default: 0.01,0.05,0.1].
    #[arg(long, value_parser = parse_float_list, value_name = "LIST")]
    pub noise: Option<Floats>,
    /// Impulse histogram bins [default: 16].
    #[arg(long)]
    pub bins: Option<usize>,
    /// Sinc bandwidth K [default: 16].
    #[arg(long)]
    pub bandwidth: Option<usize>,
    /// Samples of t on [0, 1) [default: 256].
    #[arg(long)]
    pub grid: Option<usize>,
}

impl IllustrationArgs {
    pub fn resolve(self) -> Result<IllustrationDiag> {
        let extract = |d| match d {
            DiagnoseConfig::Illustration(x) => Some(x),
            _ => None,
        };
        let mut c = diag_base(&self.config.config, extract, IllustrationDiag::default(), "diagnose illustration")?;
        set(&mut c.points, self.points);
        set(&mut c.noise, self.noise);
        set(&mut c.bins, self.bins);
        set(&mut c.bandwidth, self.bandwidth);
        set(&mut c.grid, self.grid);
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct SuiteArgs {
    /// Training manifest (with --test-manifest) instead of the synthetic
    /// suite.
    #[arg(long, value_name = "FILE")]
    pub train_manifest: Option<PathBuf>,
    /// Test manifest (with --train-manifest).
    #[arg(long, value_name = "FILE")]
    pub test_manifest: Option<PathBuf>,
    /// Synthetic classes [default: 6].
    #[arg(long)]
    pub classes: Option<usize>,
    /// Synthetic training instances per class [default: 200].
    #[arg(long)]
    pub train_per_class: Option<usize>,
    /// Synthetic test instances per class [default: 100].
    #[arg(long)]
    pub test_per_class: Option<usize>,
    /// Points per synthetic cloud [default: 1024].
    #[arg(long)]
    pub points: Option<usize>,
    /// Synthetic data seed; test data uses seed + 1 [default: 0].
    #[arg(long)]
    pub data_seed: Option<u64>,
}

impl SuiteArgs {
    fn apply(self, d: &mut SuiteData) {
        if self.train_manifest.is_some() {
            d.train_manifest = self.train_manifest;
        }
        if self.test_manifest.is_some() {
            d.test_manifest = self.test_manifest;
        }
        set(&mut d.classes, self.classes);
        set(&mut d.train_per_class, self.train_per_class);
        set(&mut d.test_per_class, self.test_per_class);
        set(&mut d.points, self.points);
        set(&mut d.seed, self.data_seed);
    }
}

#[derive(Debug, Args)]
pub struct ScaleSweepArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[command(flatten)]
    pub data: SuiteArgs,
    /// Encoder kind [default: rff].
    #[arg(long, value_name = "KIND")]
    pub encoder: Option<EncoderKind>,
    /// Embedding dimension [default: 256].
    #[arg(long)]
    pub dim: Option<usize>,
    /// Encoder seed [default: 0].
    #[arg(long)]
    pub encoder_seed: Option<u64>,
    /// Pooling [default: mean].
    #[arg(long, value_name = "POOL")]
    pub pool: Option<PoolingKind>,
    /// Scales [default: 0.05,0.1,0.5,1,5,10].
    #[arg(long, value_parser = parse_float_list, value_name = "LIST")]
    pub scales: Option<Floats>,
    /// Head training [defaults: 30 epochs, hidden 128,64].
    #[command(flatten)]
    pub train: TrainFlags,
}

impl ScaleSweepArgs {
    pub fn resolve(self) -> Result<ScaleSweepDiag> {
        let extract = |d| match d {
            DiagnoseConfig::ScaleSweep(x) => Some(x),
            _ => None,
        };
        let mut c = diag_base(&self.config.config, extract, ScaleSweepDiag::default(), "diagnose scale-sweep")?;
        self.data.apply(&mut c.data);
        set(&mut c.encoder, self.encoder);
        set(&mut c.dim, self.dim);
        set(&mut c.encoder_seed, self.encoder_seed);
        set(&mut c.pooling, self.pool);
        set(&mut c.scales, self.scales);
        self.train.apply(&mut c.train);
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct RobustnessArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[command(flatten)]
    pub data: SuiteArgs,
    /// Encoder kind [default: rff].
    #[arg(long, value_name = "KIND")]
    pub encoder: Option<EncoderKind>,
    /// Embedding dimension [default: 256].
    #[arg(long)]
    pub dim: Option<usize>,
    /// Encoder seed [default: 0].
    #[arg(long)]
    pub encoder_seed: Option<u64>,
    /// Heads as pool:scale pairs [default: max:0.09,mean:0.9,median:0.9].
    #[arg(long, value_parser = parse_heads, value_name = "LIST")]
    pub heads: Option<Heads>,
    /// Corruption columns as kind:level or kind=param
    /// [default: background:5,gaussian:5].
    #[arg(long, value_parser = parse_cells, value_name = "LIST")]
    pub corruptions: Option<Cells>,
    /// Corruption seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Head training [defaults: 30 epochs, hidden 128,64].
    #[command(flatten)]
    pub train: TrainFlags,
}

impl RobustnessArgs {
    pub fn resolve(self) -> Result<RobustnessDiag> {
        let extract = |d| match d {
            DiagnoseConfig::Robustness(x) => Some(x),
            _ => None,
        };
        let mut c = diag_base(&self.config.config, extract, RobustnessDiag::default(), "diagnose robustness")?;
        self.data.apply(&mut c.data);
        set(&mut c.encoder, self.encoder);
        set(&mut c.dim, self.dim);
        set(&mut c.encoder_seed, self.encoder_seed);
        set(&mut c.heads, self.heads);
        set(&mut c.corruptions, self.corruptions);
        set(&mut c.seed, self.seed);
        self.train.apply(&mut c.train);
        Ok(c)
    }
}

impl Command {
    /// The run configuration this command describes.
    pub fn into_config(self) -> Result<RunConfig> {
        Ok(match self {
            Command::Dataset(a) => RunConfig::Dataset(a.resolve()?),
            Command::Corrupt(a) => RunConfig::Corrupt(a.resolve()?),
            Command::Train(a) => RunConfig::Train(a.resolve()?),
            Command::Eval(a) => RunConfig::Eval(a.resolve()?),
            Command::Register(a) => RunConfig::Register(a.resolve()?),
            Command::Diagnose(d) => RunConfig::Diagnose(match d {
                DiagnoseCommand::Distance(a) => DiagnoseConfig::Distance(a.resolve()?),
                DiagnoseCommand::Frequency(a) => DiagnoseConfig::Frequency(a.resolve()?),
                DiagnoseCommand::Illustration(a) => DiagnoseConfig::Illustration(a.resolve()?),
                DiagnoseCommand::ScaleSweep(a) => DiagnoseConfig::ScaleSweep(a.resolve()?),
                DiagnoseCommand::Robustness(a) => DiagnoseConfig::Robustness(a.resolve()?),
            }),
            Command::Run(a) => RunConfig::load(&a.config)?,
        })
    }
}
