use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ClassifierModel, Mode, DEFAULT_BN_EPS, DEFAULT_BN_MOMENTUM, DEFAULT_DROPOUT, DEFAULT_HIDDEN};
use crate::encoders::Encoder;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::pointcloud::PointCloud;
use crate::pooling::{global_feature, PoolingKind};
use crate::rng::SeededRng;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    /// Heavy-ball SGD: `v ← μ v + g`, `p ← p − lr v`.
    SgdMomentum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrSchedule {
    Constant,
    /// Per-epoch cosine decay from `learning_rate` to `min_learning_rate`.
    Cosine,
}

/// Per-sample random scaling and translation of the input clouds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Augmentation {
    pub random_scale: bool,
    pub random_translate: bool,
    /// Per-axis factor range.
    pub scale_range: [f64; 2],
    /// Per-axis offset range.
    pub translate_range: [f64; 2],
}

impl Default for Augmentation {
    fn default() -> Self {
        Self {
            random_scale: false,
            random_translate: false,
            scale_range: [2.0 / 3.0, 1.5],
            translate_range: [-0.2, 0.2],
        }
    }
}

impl Augmentation {
    pub fn enabled(&self) -> bool {
        self.random_scale || self.random_translate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub min_learning_rate: f64,
    pub schedule: LrSchedule,
    pub optimizer: OptimizerKind,
    pub momentum: f64,
    pub weight_decay: f64,
    pub dropout: f64,
    pub bn_momentum: f64,
    pub bn_eps: f64,
    pub hidden: [usize; 2],
    /// Inferred from the labels when absent.
    pub num_classes: Option<usize>,
    pub augmentation: Augmentation,
    /// Recompute BN running statistics over the full training set after
    /// the last epoch.
    pub recalibrate_bn: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 32,
            learning_rate: 0.1,
            min_learning_rate: 1e-3,
            schedule: LrSchedule::Cosine,
            optimizer: OptimizerKind::SgdMomentum,
            momentum: 0.9,
            weight_decay: 1e-4,
            dropout: DEFAULT_DROPOUT,
            bn_momentum: DEFAULT_BN_MOMENTUM,
            bn_eps: DEFAULT_BN_EPS,
            hidden: DEFAULT_HIDDEN,
            num_classes: None,
            augmentation: Augmentation::default(),
            recalibrate_bn: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1");
        }
        if !(self.learning_rate > 0.0) || !(self.min_learning_rate >= 0.0) {
            return bad("learning rates must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) || !(self.weight_decay >= 0.0) {
            return bad("momentum must be in [0, 1) and weight decay non-negative");
        }
        let [lo, hi] = self.augmentation.scale_range;
        let [tlo, thi] = self.augmentation.translate_range;
        if !(lo > 0.0 && lo <= hi) || !(tlo <= thi) {
            return bad("augmentation ranges are inverted");
        }
        Ok(())
    }

    /// Learning rate used during `epoch` (0-based).
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        match self.schedule {
            LrSchedule::Constant => self.learning_rate,
            LrSchedule::Cosine => {
                let t = epoch as f64 / self.epochs as f64;
                self.min_learning_rate
                    + 0.5
                        * (self.learning_rate - self.min_learning_rate)
                        * (1.0 + (std::f64::consts::PI * t).cos())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub learning_rate: f64,
    /// Mean cross-entropy over the epoch's batches (train mode).
    pub loss: f64,
    pub train_accuracy: f64,
}

/// Random per-axis scaling then translation, one draw per cloud.
pub fn augment<T: Real>(pc: &PointCloud<T>, aug: &Augmentation, rng: &mut SeededRng) -> PointCloud<T> {
    let scale = if aug.random_scale {
        [(); 3].map(|_| rng.uniform_in(aug.scale_range[0], aug.scale_range[1]))
    } else {
        [1.0; 3]
    };
    let shift = if aug.random_translate {
        [(); 3].map(|_| rng.uniform_in(aug.translate_range[0], aug.translate_range[1]))
    } else {
        [0.0; 3]
    };
    pc.map_points(|p| [0, 1, 2].map(|k| p[k] * T::lit(scale[k]) + T::lit(shift[k])))
}

/// Pooled feature of every cloud, one row each.
pub fn extract_features<T: Real>(
    clouds: &[PointCloud<T>],
    encoder: &Encoder<T>,
    pooling: PoolingKind,
) -> Result<Matrix<T>> {
    if clouds.is_empty() {
        return Err(Error::Empty("no clouds to encode".into()));
    }
    let rows = clouds
        .par_iter()
        .map(|pc| global_feature(pc, encoder, pooling).map(|f| f.values))
        .collect::<Result<Vec<_>>>()?;
    Matrix::from_rows(&rows)
}

/// Labels of every cloud; errors on the first unlabelled one.
pub fn labels_of<T: Real>(clouds: &[PointCloud<T>]) -> Result<Vec<usize>> {
    clouds
        .iter()
        .enumerate()
        .map(|(i, pc)| {
            pc.label()
                .ok_or_else(|| Error::InvalidArgument(format!("cloud {i} has no label")))
        })
        .collect()
}

fn resolve_classes(labels: &[usize], cfg: &TrainConfig) -> Result<usize> {
    let mut seen: Vec<usize> = labels.to_vec();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() < 2 {
        return Err(Error::DegenerateDataset(format!(
            "need at least two classes, found {}",
            seen.len()
        )));
    }
    let inferred = seen.last().copied().unwrap_or(0) + 1;
    match cfg.num_classes {
        Some(c) if c < inferred => Err(Error::Config(format!(
            "num_classes {c} is smaller than label {}",
            inferred - 1
        ))),
        Some(c) => Ok(c),
        None => Ok(inferred),
    }
}

/// Core loop. `features_for_epoch` supplies the N × K feature matrix for
/// each epoch (fixed features or freshly augmented ones).
fn fit_with<T: Real>(
    labels: &[usize],
    dim_in: usize,
    cfg: &TrainConfig,
    mut features_for_epoch: impl FnMut(usize) -> Result<Matrix<T>>,
) -> Result<(ClassifierModel<T>, Vec<EpochStats>)> {
    cfg.validate()?;
    let classes = resolve_classes(labels, cfg)?;
    let root = SeededRng::new(cfg.seed);
    let mut model = ClassifierModel::new(
        dim_in,
        cfg.hidden,
        classes,
        cfg.dropout,
        cfg.bn_momentum,
        cfg.bn_eps,
        &mut root.fork(0),
    )?;
    let mut order_rng = root.fork(1);
    let mut dropout_rng = root.fork(2);
    let mut velocity: Vec<Vec<T>> = model.parameters_mut().iter().map(|p| vec![T::zero(); p.len()]).collect();
    let momentum = T::lit(cfg.momentum);
    let decay = T::lit(cfg.weight_decay);
    let n = labels.len();
    let mut history = Vec::with_capacity(cfg.epochs);

    model.set_mode(Mode::Train);
    let mut last_features = None;
    for epoch in 0..cfg.epochs {
        let features = features_for_epoch(epoch)?;
        let lr = cfg.learning_rate_at(epoch);
        let step = T::lit(lr);
        let mut order: Vec<usize> = (0..n).collect();
        order_rng.shuffle(&mut order);
        let (mut loss_sum, mut seen, mut correct) = (0.0, 0usize, 0usize);
        for batch in order.chunks(cfg.batch_size) {
            // batch statistics are undefined for a single sample
            if batch.len() < 2 {
                continue;
            }
            let x = features.select_rows(batch);
            let y: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            let (loss, ok, grads) = model.forward_backward(&x, &y, &mut dropout_rng)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("training loss at epoch {epoch}")));
            }
            loss_sum += loss * batch.len() as f64;
            seen += batch.len();
            correct += ok;
            for ((param, grad), vel) in model.parameters_mut().into_iter().zip(&grads).zip(&mut velocity) {
                for ((p, &g), v) in param.iter_mut().zip(grad).zip(vel.iter_mut()) {
                    *v = momentum * *v + g + decay * *p;
                    *p = *p - step * *v;
                }
            }
        }
        let seen_f = seen.max(1) as f64;
        history.push(EpochStats {
            epoch,
            learning_rate: lr,
            loss: loss_sum / seen_f,
            train_accuracy: correct as f64 / seen_f,
        });
        last_features = Some(features);
    }
    if cfg.recalibrate_bn {
        if let Some(x) = &last_features {
            model.recalibrate_batch_norm(x)?;
        }
    }
    model.set_mode(Mode::Eval);
    Ok((model, history))
}

/// Trains on precomputed features; returns the model (in eval mode) and
/// per-epoch statistics.
pub fn fit<T: Real>(
    features: &Matrix<T>,
    labels: &[usize],
    cfg: &TrainConfig,
) -> Result<(ClassifierModel<T>, Vec<EpochStats>)> {
    if features.rows() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: features.rows(),
            actual: labels.len(),
        });
    }
    if features.rows() == 0 {
        return Err(Error::Empty("no training samples".into()));
    }
    if !features.is_finite() {
        return Err(Error::NonFinite("training features".into()));
    }
    if cfg.augmentation.enabled() {
        return Err(Error::Config(
            "augmentation acts on clouds; use fit_clouds".into(),
        ));
    }
    fit_with(labels, features.cols(), cfg, |_| Ok(features.clone()))
}

pub fn train<T: Real>(
    features: &Matrix<T>,
    labels: &[usize],
    cfg: &TrainConfig,
) -> Result<ClassifierModel<T>> {
    fit(features, labels, cfg).map(|(m, _)| m)
}

/// Trains from labeled clouds through a frozen encoder. With augmentation
/// on, features are recomputed from freshly augmented clouds every epoch.
pub fn fit_clouds<T: Real>(
    clouds: &[PointCloud<T>],
    encoder: &Encoder<T>,
    pooling: PoolingKind,
    cfg: &TrainConfig,
) -> Result<(ClassifierModel<T>, Vec<EpochStats>)> {
    let labels = labels_of(clouds)?;
    if !cfg.augmentation.enabled() {
        let features = extract_features(clouds, encoder, pooling)?;
        return fit(&features, &labels, cfg);
    }
    let aug_root = SeededRng::new(cfg.seed).fork(3);
    fit_with(&labels, encoder.dim_out(), cfg, |epoch| {
        let epoch_rng = aug_root.fork(epoch as u64);
        let augmented: Vec<PointCloud<T>> = clouds
            .iter()
            .enumerate()
            .map(|(i, pc)| augment(pc, &cfg.augmentation, &mut epoch_rng.fork(i as u64)))
            .collect();
        extract_features(&augmented, encoder, pooling)
    })
}

pub fn train_on_clouds<T: Real>(
    clouds: &[PointCloud<T>],
    encoder: &Encoder<T>,
    pooling: PoolingKind,
    cfg: &TrainConfig,
) -> Result<ClassifierModel<T>> {
    fit_clouds(clouds, encoder, pooling, cfg).map(|(m, _)| m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoders::{build_encoder, EncoderKind};
    use crate::pointcloud::{make_shape, ShapeKind};

    fn toy(n: usize, seed: u64) -> (Matrix<f64>, Vec<usize>) {
        let mut rng = SeededRng::new(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let y = i % 2;
            let centre = if y == 0 { -1.0 } else { 1.0 };
            rows.push((0..8).map(|_| centre + 0.3 * rng.normal()).collect());
            labels.push(y);
        }
        (Matrix::from_rows(&rows).unwrap(), labels)
    }

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            epochs: 50,
            batch_size: 16,
            hidden: [32, 16],
            seed: 3,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn separable_toy_reaches_full_accuracy() {
        let (x, y) = toy(80, 1);
        let (model, history) = fit(&x, &y, &small_cfg()).unwrap();
        assert_eq!(model.mode, Mode::Eval);
        let pred = model.predict(&x).unwrap();
        assert_eq!(pred, y);
        assert!(history.last().unwrap().loss < history[0].loss);
    }

    #[test]
    fn training_is_deterministic() {
        let (x, y) = toy(40, 2);
        let a = train(&x, &y, &small_cfg()).unwrap();
        let b = train(&x, &y, &small_cfg()).unwrap();
        assert_eq!(a, b);
        let c = train(&x, &y, &TrainConfig { seed: 4, ..small_cfg() }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn single_class_is_degenerate() {
        let (x, _) = toy(10, 1);
        assert!(matches!(
            train(&x, &[1; 10], &small_cfg()),
            Err(Error::DegenerateDataset(_))
        ));
    }

    #[test]
    fn config_validation() {
        let (x, y) = toy(10, 1);
        for cfg in [
            TrainConfig { epochs: 0, ..small_cfg() },
            TrainConfig { batch_size: 0, ..small_cfg() },
            TrainConfig { num_classes: Some(1), ..small_cfg() },
        ] {
            assert!(matches!(train(&x, &y, &cfg), Err(Error::Config(_))));
        }
        let wide = train(&x, &y, &TrainConfig { num_classes: Some(5), epochs: 1, ..small_cfg() });
        assert_eq!(wide.unwrap().num_classes(), 5);
    }

    #[test]
    fn cosine_schedule_endpoints() {
        let cfg = TrainConfig { epochs: 10, ..TrainConfig::default() };
        assert_eq!(cfg.learning_rate_at(0), 0.1);
        assert!(cfg.learning_rate_at(5) < 0.1 && cfg.learning_rate_at(5) > 1e-3);
        assert!(cfg.learning_rate_at(9) < cfg.learning_rate_at(8));
    }

    #[test]
    fn augmentation_respects_bounds() {
        let pc = PointCloud::new(vec![[1.0, 1.0, 1.0], [0.0, 0.0, 0.0]]).unwrap();
        let aug = Augmentation {
            random_scale: true,
            random_translate: true,
            ..Augmentation::default()
        };
        let mut rng = SeededRng::new(5);
        for _ in 0..1000 {
            let out = augment(&pc, &aug, &mut rng);
            let shift = out.points()[1];
            let scaled = out.points()[0];
            for k in 0..3 {
                assert!((-0.2..=0.2).contains(&shift[k]));
                let s = scaled[k] - shift[k];
                assert!((2.0 / 3.0 - 1e-12..=1.5 + 1e-12).contains(&s));
            }
        }
        assert_eq!(augment(&pc, &Augmentation::default(), &mut rng), pc);
    }

    #[test]
    fn training_leaves_encoder_untouched() {
        let mut rng = SeededRng::new(6);
        let clouds: Vec<PointCloud<f64>> = (0..12)
            .map(|i| make_shape(ShapeKind::ALL[i % 2], 64, &mut rng).unwrap())
            .collect();
        let encoder: Encoder<f64> = build_encoder(EncoderKind::Rff, 3, 32, 0.5, 1).unwrap();
        let before = encoder.checksum();
        let cfg = TrainConfig {
            epochs: 2,
            batch_size: 4,
            hidden: [8, 8],
            augmentation: Augmentation {
                random_scale: true,
                random_translate: true,
                ..Augmentation::default()
            },
            ..TrainConfig::default()
        };
        let (_, hist) = fit_clouds(&clouds, &encoder, PoolingKind::Mean, &cfg).unwrap();
        assert_eq!(hist.len(), 2);
        assert_eq!(encoder.checksum(), before);
        let (x, _) = toy(4, 0);
        assert!(fit(&x, &[0, 1, 0, 1], &cfg).is_err());
    }
}
