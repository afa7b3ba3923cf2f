use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::se3::{se3_exp, RigidTransform};
use super::solver::{register, RegistrationOptions, RegistrationResult};
use crate::corruptions::{corrupt, CorruptionKind, CorruptionSpec};
use crate::encoders::Encoder;
use crate::error::{Error, Result};
use crate::pointcloud::PointCloud;
use crate::pooling::PoolingKind;
use crate::rng::SeededRng;
use crate::scalar::Real;

/// A trial succeeds when both errors are strictly below these bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessCriterion {
    pub max_rotation_deg: f64,
    pub max_translation: f64,
}

impl Default for SuccessCriterion {
    fn default() -> Self {
        Self {
            max_rotation_deg: 5.0,
            max_translation: 0.05,
        }
    }
}

impl SuccessCriterion {
    pub fn accepts(&self, rot_deg: f64, trans: f64) -> bool {
        rot_deg < self.max_rotation_deg && trans < self.max_translation
    }

    pub fn describe(&self) -> String {
        format!(
            "success: rotation error < {} deg and translation error < {}",
            self.max_rotation_deg, self.max_translation
        )
    }
}

/// Bounds for random ground-truth poses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationBounds {
    pub max_angle_deg: f64,
    pub max_translation: f64,
}

impl Default for PerturbationBounds {
    fn default() -> Self {
        Self {
            max_angle_deg: 30.0,
            max_translation: 0.3,
        }
    }
}

/// Uniform axis, angle uniform in `[0, max_angle]`, translation uniform in
/// the cube `[−max_t, max_t]³`.
pub fn random_perturbation<T: Real>(bounds: &PerturbationBounds, rng: &mut SeededRng) -> RigidTransform<T> {
    let axis = rng.unit_vector();
    let angle = rng.uniform_in(0.0, bounds.max_angle_deg).to_radians();
    let t = [(); 3].map(|_| rng.uniform_in(-bounds.max_translation, bounds.max_translation));
    let rot = se3_exp(&[axis[0] * angle, axis[1] * angle, axis[2] * angle, 0.0, 0.0, 0.0]);
    RigidTransform::new(rot.rotation, t).cast()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub poolings: Vec<PoolingKind>,
    /// Corruption applied to the target with each noise level as its
    /// parameter.
    #[serde(default = "default_noise")]
    pub noise: CorruptionKind,
    pub noise_levels: Vec<f64>,
    pub trials: usize,
    pub perturbation: PerturbationBounds,
    pub criterion: SuccessCriterion,
    pub options: RegistrationOptions,
    pub seed: u64,
}

fn default_noise() -> CorruptionKind {
    CorruptionKind::GaussianNoise
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            poolings: vec![PoolingKind::Mean, PoolingKind::Max],
            noise: default_noise(),
            noise_levels: (1..=10).map(|k| k as f64 / 100.0).collect(),
            trials: 50,
            perturbation: PerturbationBounds::default(),
            criterion: SuccessCriterion::default(),
            options: RegistrationOptions::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub pooling: PoolingKind,
    pub sigma: f64,
    pub trials: usize,
    pub successes: usize,
    pub mean_rot_err_deg: f64,
    pub mean_trans_err: f64,
}

impl SweepRow {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.trials.max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct TrialRecord<T: Real> {
    pub pooling: PoolingKind,
    pub sigma: f64,
    pub trial: usize,
    pub truth: RigidTransform<T>,
    pub result: RegistrationResult<T>,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SweepTable<T: Real> {
    pub criterion: SuccessCriterion,
    pub rows: Vec<SweepRow>,
    /// Per-trial detail, in row order then trial order.
    pub trials: Vec<TrialRecord<T>>,
}

impl<T: Real> SweepTable<T> {
    pub fn row(&self, pooling: PoolingKind, sigma: f64) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.pooling == pooling && r.sigma == sigma)
    }
}

/// One registration problem: `(source, truth, noisy target)` for trial `t`
/// at noise `sigma`. The pose depends only on `(seed, t)`, and the noise
/// only on `(seed, t, sigma index)`, so different poolings see the same
/// problems.
pub fn trial_problem<T: Real>(
    dataset: &[PointCloud<T>],
    cfg: &SweepConfig,
    trial: usize,
    level_index: usize,
) -> Result<(PointCloud<T>, RigidTransform<T>, PointCloud<T>)> {
    let root = SeededRng::new(cfg.seed).fork(trial as u64);
    let source = dataset[trial % dataset.len()].clone();
    let truth = random_perturbation(&cfg.perturbation, &mut root.fork(0));
    let clean = truth.apply_cloud(&source);
    let sigma = cfg.noise_levels[level_index];
    let noise_seed = root.fork(1 + level_index as u64).next_u64();
    let target = corrupt(
        &clean,
        &CorruptionSpec::with_param(cfg.noise, sigma, noise_seed),
    )?;
    Ok((source, truth, target))
}

/// Success-rate table with `|poolings| × |noise_levels|` rows.
pub fn noise_sweep<T: Real>(
    dataset: &[PointCloud<T>],
    encoder: &Encoder<T>,
    cfg: &SweepConfig,
) -> Result<SweepTable<T>> {
    if dataset.is_empty() {
        return Err(Error::Empty("registration dataset is empty".into()));
    }
    if cfg.trials == 0 || cfg.poolings.is_empty() || cfg.noise_levels.is_empty() {
        return Err(Error::Config(
            "sweep needs trials, poolings and noise levels".into(),
        ));
    }
    if cfg.noise_levels.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(Error::Config("noise levels must be non-negative".into()));
    }
    for &sigma in &cfg.noise_levels {
        CorruptionSpec::with_param(cfg.noise, sigma, 0).severity()?;
    }
    let mut jobs = Vec::new();
    for &pooling in &cfg.poolings {
        for level in 0..cfg.noise_levels.len() {
            for trial in 0..cfg.trials {
                jobs.push((pooling, level, trial));
            }
        }
    }
    let records = jobs
        .par_iter()
        .map(|&(pooling, level, trial)| {
            let (source, truth, target) = trial_problem(dataset, cfg, trial, level)?;
            let mut result = register(&source, &target, encoder, pooling, &cfg.options)?;
            result.score(&truth);
            let success = cfg.criterion.accepts(
                result.rotation_error_deg.unwrap_or(f64::INFINITY),
                result.translation_error.unwrap_or(f64::INFINITY),
            );
            Ok(TrialRecord {
                pooling,
                sigma: cfg.noise_levels[level],
                trial,
                truth,
                result,
                success,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = records
        .chunks(cfg.trials)
        .map(|chunk| {
            let n = chunk.len() as f64;
            SweepRow {
                pooling: chunk[0].pooling,
                sigma: chunk[0].sigma,
                trials: chunk.len(),
                successes: chunk.iter().filter(|t| t.success).count(),
                mean_rot_err_deg: chunk
                    .iter()
                    .map(|t| t.result.rotation_error_deg.unwrap_or(f64::NAN))
                    .sum::<f64>()
                    / n,
                mean_trans_err: chunk
                    .iter()
                    .map(|t| t.result.translation_error.unwrap_or(f64::NAN))
                    .sum::<f64>()
                    / n,
            }
        })
        .collect();
    Ok(SweepTable {
        criterion: cfg.criterion,
        rows,
        trials: records,
    })
}
