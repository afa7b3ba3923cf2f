use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::train::labels_of;
use super::ClassifierModel;
use crate::corruptions::{corrupt, CorruptionSpec};
use crate::encoders::Encoder;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::pointcloud::PointCloud;
use crate::pooling::{global_feature, PoolingKind};
use crate::rng::SeededRng;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub samples: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub error_rate: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

impl EvalReport {
    fn from_predictions(labels: &[usize], predicted: &[usize], classes: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Empty("nothing to evaluate".into()));
        }
        let mut confusion = vec![vec![0; classes]; classes];
        let mut correct = 0;
        for (&y, &p) in labels.iter().zip(predicted) {
            if y >= classes {
                return Err(Error::InvalidArgument(format!("label {y} exceeds {classes} classes")));
            }
            confusion[y][p] += 1;
            correct += usize::from(y == p);
        }
        let accuracy = correct as f64 / labels.len() as f64;
        Ok(Self {
            samples: labels.len(),
            correct,
            accuracy,
            error_rate: 1.0 - accuracy,
            confusion,
        })
    }
}

/// Scores precomputed features.
pub fn evaluate_features<T: Real>(
    model: &ClassifierModel<T>,
    features: &Matrix<T>,
    labels: &[usize],
) -> Result<EvalReport> {
    if features.rows() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: features.rows(),
            actual: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::Empty("nothing to evaluate".into()));
    }
    let predicted = model.predict(features)?;
    EvalReport::from_predictions(labels, &predicted, model.num_classes())
}

/// Encodes, optionally corrupts and classifies every cloud. Cloud `i` is
/// corrupted with a seed derived from `(spec.seed, i)`, so results do not
/// depend on evaluation order.
pub fn evaluate<T: Real>(
    model: &ClassifierModel<T>,
    encoder: &Encoder<T>,
    pooling: PoolingKind,
    dataset: &[PointCloud<T>],
    spec: Option<&CorruptionSpec>,
) -> Result<EvalReport> {
    if dataset.is_empty() {
        return Err(Error::Empty("evaluation dataset is empty".into()));
    }
    let labels = labels_of(dataset)?;
    let rows = dataset
        .par_iter()
        .enumerate()
        .map(|(i, pc)| {
            let pc = match spec {
                Some(s) => {
                    let seed = SeededRng::new(s.seed).fork(i as u64).next_u64();
                    corrupt(pc, &s.with_seed(seed))?
                }
                None => pc.clone(),
            };
            global_feature(&pc, encoder, pooling).map(|f| f.values)
        })
        .collect::<Result<Vec<_>>>()?;
    evaluate_features(model, &Matrix::from_rows(&rows)?, &labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{fit_clouds, TrainConfig};
    use crate::corruptions::CorruptionKind;
    use crate::encoders::{build_encoder, EncoderKind};
    use crate::pointcloud::{make_shape, ShapeKind};

    fn dataset(n_per_class: usize, seed: u64) -> Vec<PointCloud<f64>> {
        let mut rng = SeededRng::new(seed);
        let mut out = Vec::new();
        for _ in 0..n_per_class {
            for (c, kind) in [ShapeKind::Sphere, ShapeKind::Cube, ShapeKind::Torus]
                .into_iter()
                .enumerate()
            {
                out.push(make_shape(kind, 128, &mut rng).unwrap().with_label(Some(c)));
            }
        }
        out
    }

    #[test]
    fn evaluation_contracts() {
        let train_set = dataset(10, 1);
        let encoder: Encoder<f64> = build_encoder(EncoderKind::Rff, 3, 64, 1.0, 2).unwrap();
        let cfg = TrainConfig {
            epochs: 30,
            batch_size: 10,
            hidden: [32, 16],
            ..TrainConfig::default()
        };
        let (model, _) = fit_clouds(&train_set, &encoder, PoolingKind::Mean, &cfg).unwrap();
        let clean = evaluate(&model, &encoder, PoolingKind::Mean, &train_set, None).unwrap();
        assert!((clean.error_rate - (1.0 - clean.accuracy)).abs() < 1e-15);
        assert_eq!(clean.samples, 30);
        let total: usize = clean.confusion.iter().flatten().sum();
        assert_eq!(total, 30);
        assert!(clean.accuracy > 0.9);

        let zero = CorruptionSpec::with_param(CorruptionKind::GaussianNoise, 0.0, 3);
        let same = evaluate(&model, &encoder, PoolingKind::Mean, &train_set, Some(&zero)).unwrap();
        assert_eq!(same, clean);

        let mut rng = SeededRng::new(9);
        let shuffled: Vec<PointCloud<f64>> = train_set
            .iter()
            .map(|pc| {
                let mut perm: Vec<usize> = (0..pc.len()).collect();
                rng.shuffle(&mut perm);
                pc.permuted(&perm)
            })
            .collect();
        for pooling in PoolingKind::ALL {
            let a = evaluate(&model, &encoder, pooling, &train_set, None).unwrap();
            let b = evaluate(&model, &encoder, pooling, &shuffled, None).unwrap();
            assert_eq!(a, b);
        }
        assert!(matches!(
            evaluate(&model, &encoder, PoolingKind::Mean, &[], None),
            Err(Error::Empty(_))
        ));
    }
}
