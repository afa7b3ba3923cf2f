//! Analytical per-point embeddings for point clouds.
//!
//! A global point-cloud feature is built in two stages: a per-point
//! embedding `h: R^3 -> R^K` ([`encoders`]) followed by a column-wise
//! permutation-invariant reduction ([`pooling`]). On top of that the crate
//! provides test-time corruptions, a small classifier head with
//! hand-written backpropagation, feature-space rigid registration, and the
//! diagnostics that tie encoder bandwidth to accuracy and robustness.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.
//!
//! ```
//! use pointpe::{build_encoder, global_feature, make_shape, EncoderKind, PoolingKind, ShapeKind};
//! use pointpe::SeededRng;
//!
//! let cloud = make_shape::<f64>(ShapeKind::Torus, 256, &mut SeededRng::new(1)).unwrap();
//! let enc = build_encoder(EncoderKind::Rff, 3, 64, 0.9, 7).unwrap();
//! let feature = global_feature(&cloud, &enc, PoolingKind::Mean).unwrap();
//! assert_eq!(feature.len(), 64);
//! ```

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

pub mod error;
pub mod fsutil;
pub mod linalg;
pub mod pointcloud;
pub mod rng;
pub mod scalar;
pub mod corruptions;
pub mod encoders;
pub mod pooling;
pub mod classifier;
pub mod registration;
pub mod diagnostics;

pub use classifier::{
    evaluate, fit, fit_clouds, Checkpoint, ClassifierModel, EvalReport, TrainConfig,
};
pub use corruptions::{corrupt, CorruptionKind, CorruptionSpec};
pub use encoders::{build_encoder, Encoder, EncoderKind, EncoderSpec};
pub use error::{Error, ErrorClass, Result};
pub use linalg::Matrix;
pub use pointcloud::{
    make_shape, make_shape_instance, synthetic_dataset, InstanceVariation, PointCloud, ShapeKind,
};
pub use pooling::{global_feature, pool, PooledFeature, PoolingKind};
pub use registration::{noise_sweep, register, RegistrationOptions, RegistrationResult, RigidTransform};
pub use rng::SeededRng;
pub use scalar::Real;

pub type PointCloudF64 = PointCloud<f64>;
pub type PointCloudF32 = PointCloud<f32>;
pub type EncoderF64 = Encoder<f64>;
pub type EncoderF32 = Encoder<f32>;
pub type MatrixF64 = Matrix<f64>;
pub type MatrixF32 = Matrix<f32>;
pub type ClassifierF64 = ClassifierModel<f64>;
pub type ClassifierF32 = ClassifierModel<f32>;
pub type CheckpointF64 = Checkpoint<f64>;
pub type CheckpointF32 = Checkpoint<f32>;
pub type RigidTransformF64 = RigidTransform<f64>;
pub type RigidTransformF32 = RigidTransform<f32>;
