//! Classification sweeps: accuracy against encoder scale, and error rate
//! against corruption for several pooling functions.

use serde::{Deserialize, Serialize};

use crate::classifier::{
    evaluate, evaluate_features, extract_features, fit, fit_clouds, labels_of, ClassifierModel,
    TrainConfig,
};
use crate::corruptions::CorruptionSpec;
use crate::encoders::{Encoder, EncoderSpec};
use crate::error::{Error, Result};
use crate::pointcloud::PointCloud;
use crate::pooling::PoolingKind;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleRow {
    pub scale: f64,
    /// Eval-mode accuracy on the training set, in `[0, 1]`.
    pub train_acc: f64,
    pub test_acc: f64,
}

/// Retrains a classifier head for each scale, keeping every other field of
/// `base` fixed.
pub fn scale_sweep<T: Real>(
    scales: &[f64],
    base: &EncoderSpec,
    pooling: PoolingKind,
    train: &[PointCloud<T>],
    test: &[PointCloud<T>],
    cfg: &TrainConfig,
) -> Result<Vec<ScaleRow>> {
    if scales.is_empty() {
        return Err(Error::InvalidArgument("scale sweep needs at least one scale".into()));
    }
    cfg.validate()?;
    scales
        .iter()
        .map(|&scale| {
            let encoder: Encoder<T> = EncoderSpec { scale, ..base.clone() }.build()?;
            if cfg.augmentation.enabled() {
                let (model, _) = fit_clouds(train, &encoder, pooling, cfg)?;
                return Ok(ScaleRow {
                    scale,
                    train_acc: evaluate(&model, &encoder, pooling, train, None)?.accuracy,
                    test_acc: evaluate(&model, &encoder, pooling, test, None)?.accuracy,
                });
            }
            let train_x = extract_features(train, &encoder, pooling)?;
            let train_y = labels_of(train)?;
            let (model, _) = fit(&train_x, &train_y, cfg)?;
            let test_x = extract_features(test, &encoder, pooling)?;
            Ok(ScaleRow {
                scale,
                train_acc: evaluate_features(&model, &train_x, &train_y)?.accuracy,
                test_acc: evaluate_features(&model, &test_x, &labels_of(test)?)?.accuracy,
            })
        })
        .collect()
}

/// A frozen encoder with its trained head.
#[derive(Debug, Clone)]
pub struct TrainedHead<T> {
    pub pooling: PoolingKind,
    pub encoder: Encoder<T>,
    pub model: ClassifierModel<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    /// Corruption name, `none` for clean data.
    pub corruption: String,
    /// Severity level 1–10; 0 for clean data or an explicit parameter.
    pub level: u8,
    /// Effective corruption parameter; 0 for clean data.
    pub severity: f64,
    pub pooling: String,
    /// Encoder scale of the head.
    pub scale: f64,
    /// Fraction misclassified, in `[0, 1]`.
    pub error_rate: f64,
}

/// Error rate of every head on clean data and under every corruption.
/// Rows are ordered by corruption (clean first), then head.
pub fn pooling_robustness_grid<T: Real>(
    heads: &[TrainedHead<T>],
    test: &[PointCloud<T>],
    corruptions: &[CorruptionSpec],
) -> Result<Vec<RobustnessRow>> {
    if heads.is_empty() {
        return Err(Error::InvalidArgument("no trained heads".into()));
    }
    let mut rows = Vec::with_capacity(heads.len() * (corruptions.len() + 1));
    let cells = std::iter::once(None).chain(corruptions.iter().map(Some));
    for spec in cells {
        let (name, level, severity) = match spec {
            None => ("none".to_string(), 0, 0.0),
            Some(s) => (s.kind.to_string(), s.level.unwrap_or(0), s.severity()?),
        };
        for h in heads {
            let report = evaluate(&h.model, &h.encoder, h.pooling, test, spec)?;
            rows.push(RobustnessRow {
                corruption: name.clone(),
                level,
                severity,
                pooling: h.pooling.to_string(),
                scale: h.encoder.spec().map_or(f64::NAN, |s| s.scale),
                error_rate: report.error_rate,
            });
        }
    }
    Ok(rows)
}

/// Trains one head per `(pooling, encoder)` setup on clean data, then
/// scores the grid.
pub fn pooling_robustness_sweep<T: Real>(
    setups: &[(PoolingKind, EncoderSpec)],
    train: &[PointCloud<T>],
    test: &[PointCloud<T>],
    corruptions: &[CorruptionSpec],
    cfg: &TrainConfig,
) -> Result<(Vec<TrainedHead<T>>, Vec<RobustnessRow>)> {
    let heads = setups
        .iter()
        .map(|(pooling, spec)| {
            let encoder: Encoder<T> = spec.build()?;
            let (model, _) = fit_clouds(train, &encoder, *pooling, cfg)?;
            Ok(TrainedHead {
                pooling: *pooling,
                encoder,
                model,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = pooling_robustness_grid(&heads, test, corruptions)?;
    Ok((heads, rows))
}
