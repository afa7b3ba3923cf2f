//! Out-of-distribution perturbations of normalized point clouds.
//!
//! Noise kinds move points and keep `N`; outlier kinds append
//! `⌊fraction · N⌋` points after the untouched originals. Every kind is a
//! pure function of the input cloud and the spec (including its seed).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{add3, dot3, mat3_vec, norm3, scale3, vec3_from_f64, Vec3};
use crate::pointcloud::PointCloud;
use crate::rng::SeededRng;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionKind {
    UniformNoise,
    GaussianNoise,
    ImpulseNoise,
    UpsamplingOutliers,
    BackgroundOutliers,
    BallOutliers,
    Rotation,
    Shear,
    Cutout,
    DensityDecrease,
}

/// Fraction ladder shared by impulse noise and background outliers.
pub const FRACTION_LADDER: [f64; 10] = [0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.7, 0.85, 1.0];
pub const IMPULSE_MAGNITUDE: f64 = 0.1;
pub const UPSAMPLING_JITTER: f64 = 0.05;
pub const DEFAULT_BALL_FRACTION: f64 = 0.1;
pub const SEVERITY_LEVELS: u8 = 10;

impl CorruptionKind {
    pub const ALL: [CorruptionKind; 10] = [
        CorruptionKind::UniformNoise,
        CorruptionKind::GaussianNoise,
        CorruptionKind::ImpulseNoise,
        CorruptionKind::UpsamplingOutliers,
        CorruptionKind::BackgroundOutliers,
        CorruptionKind::BallOutliers,
        CorruptionKind::Rotation,
        CorruptionKind::Shear,
        CorruptionKind::Cutout,
        CorruptionKind::DensityDecrease,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CorruptionKind::UniformNoise => "uniform_noise",
            CorruptionKind::GaussianNoise => "gaussian_noise",
            CorruptionKind::ImpulseNoise => "impulse_noise",
            CorruptionKind::UpsamplingOutliers => "upsampling_outliers",
            CorruptionKind::BackgroundOutliers => "background_outliers",
            CorruptionKind::BallOutliers => "ball_outliers",
            CorruptionKind::Rotation => "rotation",
            CorruptionKind::Shear => "shear",
            CorruptionKind::Cutout => "cutout",
            CorruptionKind::DensityDecrease => "density_decrease",
        }
    }

    /// Short CLI aliases (`uniform`, `background`, ...) are accepted too.
    fn alias(self) -> Option<&'static str> {
        match self {
            CorruptionKind::UniformNoise => Some("uniform"),
            CorruptionKind::GaussianNoise => Some("gaussian"),
            CorruptionKind::ImpulseNoise => Some("impulse"),
            CorruptionKind::UpsamplingOutliers => Some("upsampling"),
            CorruptionKind::BackgroundOutliers => Some("background"),
            CorruptionKind::BallOutliers => Some("ball"),
            _ => None,
        }
    }

    /// Kinds with a 10-level severity ladder.
    pub fn has_levels(self) -> bool {
        self.alias().is_some()
    }

    pub fn is_outlier(self) -> bool {
        matches!(
            self,
            CorruptionKind::UpsamplingOutliers
                | CorruptionKind::BackgroundOutliers
                | CorruptionKind::BallOutliers
        )
    }
}

impl fmt::Display for CorruptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CorruptionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s || k.alias() == Some(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown corruption kind {s:?}")))
    }
}

/// Parameter ladder for levels 1..=10.
pub fn severity_table(kind: CorruptionKind) -> Result<Vec<f64>> {
    let steps = |num: f64, den: f64| (1..=10).map(|k| k as f64 * num / den).collect();
    match kind {
        CorruptionKind::UniformNoise | CorruptionKind::GaussianNoise => Ok(steps(1.0, 100.0)),
        CorruptionKind::ImpulseNoise | CorruptionKind::BackgroundOutliers => {
            Ok(FRACTION_LADDER.to_vec())
        }
        CorruptionKind::UpsamplingOutliers => Ok(steps(1.0, 10.0)),
        CorruptionKind::BallOutliers => Ok(steps(3.0, 10.0)),
        _ => Err(Error::InvalidSeverity {
            kind: kind.to_string(),
            message: "no level ladder; pass an explicit parameter".into(),
        }),
    }
}

/// Kind-specific settings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorruptionExtra {
    /// Explicit severity, used instead of a level: noise scale, outlier
    /// fraction, ball radius, rotation angle (radians), shear factor, cutout
    /// hole size or density keep fraction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<f64>,
    /// Ball outliers only: fraction of `N` appended (default 0.1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fraction: Option<f64>,
    /// Rotation only; drawn from the seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<[f64; 3]>,
    /// Cutout only (default 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_holes: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionSpec {
    pub kind: CorruptionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<u8>,
    #[serde(default)]
    pub extra: CorruptionExtra,
    #[serde(default)]
    pub seed: u64,
}

impl CorruptionSpec {
    pub fn at_level(kind: CorruptionKind, level: u8, seed: u64) -> Self {
        Self {
            kind,
            level: Some(level),
            extra: CorruptionExtra::default(),
            seed,
        }
    }

    pub fn with_param(kind: CorruptionKind, param: f64, seed: u64) -> Self {
        Self {
            kind,
            level: None,
            extra: CorruptionExtra {
                param: Some(param),
                ..CorruptionExtra::default()
            },
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    fn invalid(&self, message: impl Into<String>) -> Error {
        Error::InvalidSeverity {
            kind: self.kind.to_string(),
            message: message.into(),
        }
    }

    /// The effective parameter after level lookup and range checks.
    pub fn severity(&self) -> Result<f64> {
        let value = match (self.level, self.extra.param) {
            (Some(_), Some(_)) => return Err(self.invalid("give either a level or a parameter")),
            (None, None) => return Err(self.invalid("missing level or parameter")),
            (Some(level), None) => {
                if !(1..=SEVERITY_LEVELS).contains(&level) {
                    return Err(self.invalid(format!("level {level} is outside 1..=10")));
                }
                severity_table(self.kind)?[usize::from(level) - 1]
            }
            (None, Some(p)) => p,
        };
        if !value.is_finite() {
            return Err(self.invalid("parameter is not finite"));
        }
        let in_unit = (0.0..=1.0).contains(&value);
        let ok = match self.kind {
            CorruptionKind::UniformNoise | CorruptionKind::GaussianNoise => value >= 0.0,
            CorruptionKind::ImpulseNoise
            | CorruptionKind::UpsamplingOutliers
            | CorruptionKind::BackgroundOutliers => in_unit,
            CorruptionKind::BallOutliers => value > 0.0,
            CorruptionKind::Rotation | CorruptionKind::Shear => true,
            CorruptionKind::Cutout => value >= 0.0 && value.fract() == 0.0,
            CorruptionKind::DensityDecrease => value > 0.0 && value <= 1.0,
        };
        if !ok {
            return Err(self.invalid(format!("parameter {value} is out of range")));
        }
        Ok(value)
    }
}

fn outlier_count(fraction: f64, n: usize) -> usize {
    (fraction * n as f64).floor() as usize
}

fn rebuild<T: Real>(pc: &PointCloud<T>, points: Vec<Vec3<T>>) -> Result<PointCloud<T>> {
    pc.with_points(points)
}

fn append<T: Real>(pc: &PointCloud<T>, extra: Vec<[f64; 3]>) -> Result<PointCloud<T>> {
    let mut points = pc.points().to_vec();
    points.extend(extra.into_iter().map(vec3_from_f64));
    rebuild(pc, points)
}

/// Applies one corruption. The label and the order of surviving original
/// points are kept.
pub fn corrupt<T: Real>(pc: &PointCloud<T>, spec: &CorruptionSpec) -> Result<PointCloud<T>> {
    let s = spec.severity()?;
    let mut rng = SeededRng::new(spec.seed);
    let n = pc.len();
    match spec.kind {
        CorruptionKind::UniformNoise => {
            let pts = pc
                .points()
                .iter()
                .map(|&p| {
                    let d = [(); 3].map(|_| rng.uniform_in(-s, s));
                    add3(p, vec3_from_f64(d))
                })
                .collect();
            rebuild(pc, pts)
        }
        CorruptionKind::GaussianNoise => {
            if s == 0.0 {
                return Ok(pc.clone());
            }
            let pts = pc
                .points()
                .iter()
                .map(|&p| {
                    let d = [(); 3].map(|_| s * rng.normal());
                    add3(p, vec3_from_f64(d))
                })
                .collect();
            rebuild(pc, pts)
        }
        CorruptionKind::ImpulseNoise => {
            let mut pts = pc.points().to_vec();
            for i in rng.sample_indices(n, outlier_count(s, n)) {
                let sign = if rng.bernoulli(0.5) { 1.0 } else { -1.0 };
                let shift = T::lit(sign * IMPULSE_MAGNITUDE);
                pts[i] = pts[i].map(|c| c + shift);
            }
            rebuild(pc, pts)
        }
        CorruptionKind::UpsamplingOutliers => {
            let extra = rng
                .sample_indices(n, outlier_count(s, n))
                .into_iter()
                .map(|i| {
                    let p = pc.points()[i];
                    [0, 1, 2].map(|k| {
                        p[k].as_f64() + rng.uniform_in(-UPSAMPLING_JITTER, UPSAMPLING_JITTER)
                    })
                })
                .collect();
            append(pc, extra)
        }
        CorruptionKind::BackgroundOutliers => {
            let extra = (0..outlier_count(s, n))
                .map(|_| [(); 3].map(|_| rng.uniform_in(-1.0, 1.0)))
                .collect();
            append(pc, extra)
        }
        CorruptionKind::BallOutliers => {
            let fraction = spec.extra.fraction.unwrap_or(DEFAULT_BALL_FRACTION);
            if !(0.0..=1.0).contains(&fraction) {
                return Err(spec.invalid(format!("ball fraction {fraction} is outside [0, 1]")));
            }
            let extra = (0..outlier_count(fraction, n))
                .map(|_| rng.unit_vector().map(|c| c * s))
                .collect();
            append(pc, extra)
        }
        CorruptionKind::Rotation => {
            let axis = match spec.extra.axis {
                Some(a) => a,
                None => rng.unit_vector(),
            };
            rotate(pc, vec3_from_f64(axis), T::lit(s))
        }
        CorruptionKind::Shear => Ok(shear(pc, T::lit(s))),
        CorruptionKind::Cutout => {
            let holes = spec.extra.n_holes.unwrap_or(1);
            cutout(pc, holes, s as usize, &mut rng)
        }
        CorruptionKind::DensityDecrease => density_decrease(pc, s, &mut rng),
    }
}

/// Rotation matrix for a unit axis and an angle (Rodrigues).
pub fn axis_angle_matrix<T: Real>(axis: Vec3<T>, angle: T) -> Result<[[T; 3]; 3]> {
    let len = norm3(axis);
    if !(len > T::zero()) || !len.is_finite() {
        return Err(Error::InvalidArgument("rotation axis must be nonzero".into()));
    }
    let [x, y, z] = scale3(axis, T::one() / len);
    let (s, c) = angle.sin_cos();
    let t = T::one() - c;
    Ok([
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ])
}

/// Rigid rotation about `axis` (normalized internally).
pub fn rotate<T: Real>(pc: &PointCloud<T>, axis: Vec3<T>, angle: T) -> Result<PointCloud<T>> {
    let r = axis_angle_matrix(axis, angle)?;
    Ok(pc.map_points(|v| mat3_vec(&r, v)))
}

/// `x' = x + f z`, `y' = y + f z`, `z' = z`.
pub fn shear<T: Real>(pc: &PointCloud<T>, factor: T) -> PointCloud<T> {
    pc.map_points(|[x, y, z]| [x + factor * z, y + factor * z, z])
}

/// Removes the `hole_size` nearest neighbours (anchor included) of each of
/// `n_holes` anchors drawn from the points still present.
pub fn cutout<T: Real>(
    pc: &PointCloud<T>,
    n_holes: usize,
    hole_size: usize,
    rng: &mut SeededRng,
) -> Result<PointCloud<T>> {
    if hole_size == 0 || n_holes == 0 {
        return Ok(pc.clone());
    }
    if n_holes.saturating_mul(hole_size) >= pc.len() {
        return Err(Error::WouldEmpty);
    }
    let pts = pc.points();
    let mut alive: Vec<usize> = (0..pc.len()).collect();
    for _ in 0..n_holes {
        let anchor = pts[alive[rng.index(alive.len())]];
        let dist = |i: usize| {
            let d = [0, 1, 2].map(|k| pts[i][k] - anchor[k]);
            dot3(d, d)
        };
        // stable on ties: by distance, then index
        alive.sort_by(|&a, &b| dist(a).total_order(&dist(b)).then(a.cmp(&b)));
        alive.drain(..hole_size);
        alive.sort_unstable();
    }
    rebuild(pc, alive.iter().map(|&i| pts[i]).collect())
}

/// Keeps `⌊keep_fraction · N⌋` uniformly chosen points in their original order.
pub fn density_decrease<T: Real>(
    pc: &PointCloud<T>,
    keep_fraction: f64,
    rng: &mut SeededRng,
) -> Result<PointCloud<T>> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::InvalidSeverity {
            kind: CorruptionKind::DensityDecrease.to_string(),
            message: format!("keep fraction {keep_fraction} is outside (0, 1]"),
        });
    }
    let keep = outlier_count(keep_fraction, pc.len());
    if keep == 0 {
        return Err(Error::WouldEmpty);
    }
    if keep == pc.len() {
        return Ok(pc.clone());
    }
    let mut idx = rng.sample_indices(pc.len(), keep);
    idx.sort_unstable();
    rebuild(pc, idx.iter().map(|&i| pc.points()[i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{mat3_det, sub3};
    use crate::pointcloud::{make_shape, ShapeKind};

    fn sphere(n: usize) -> PointCloud<f64> {
        make_shape(ShapeKind::Sphere, n, &mut SeededRng::new(0)).unwrap()
    }

    fn spec(kind: CorruptionKind, param: f64) -> CorruptionSpec {
        CorruptionSpec::with_param(kind, param, 17)
    }

    #[test]
    fn ladders() {
        let g = severity_table(CorruptionKind::GaussianNoise).unwrap();
        assert_eq!(g, vec![0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.1]);
        let b = severity_table(CorruptionKind::BallOutliers).unwrap();
        assert_eq!(b, vec![0.3, 0.6, 0.9, 1.2, 1.5, 1.8, 2.1, 2.4, 2.7, 3.0]);
        let i = severity_table(CorruptionKind::ImpulseNoise).unwrap();
        assert_eq!(i[0], 0.02);
        assert_eq!(i[9], 1.0);
        assert_eq!(severity_table(CorruptionKind::UpsamplingOutliers).unwrap()[9], 1.0);
        assert!(severity_table(CorruptionKind::Shear).is_err());
        let lvl = CorruptionSpec::at_level(CorruptionKind::ImpulseNoise, 10, 0);
        assert_eq!(lvl.severity().unwrap(), 1.0);
    }

    #[test]
    fn invalid_severities() {
        let pc = sphere(32);
        for bad in [
            CorruptionSpec::at_level(CorruptionKind::GaussianNoise, 0, 0),
            CorruptionSpec::at_level(CorruptionKind::GaussianNoise, 11, 0),
            CorruptionSpec::at_level(CorruptionKind::Rotation, 3, 0),
            spec(CorruptionKind::GaussianNoise, -0.1),
            spec(CorruptionKind::BackgroundOutliers, 1.5),
            spec(CorruptionKind::BallOutliers, 0.0),
            spec(CorruptionKind::Cutout, 2.5),
            spec(CorruptionKind::DensityDecrease, 0.0),
            spec(CorruptionKind::UniformNoise, f64::NAN),
            CorruptionSpec {
                level: Some(2),
                ..spec(CorruptionKind::UniformNoise, 0.1)
            },
        ] {
            assert!(
                matches!(corrupt(&pc, &bad), Err(Error::InvalidSeverity { .. })),
                "{bad:?}"
            );
        }
    }

    #[test]
    fn zero_gaussian_noise_is_identity() {
        let pc = sphere(64);
        assert_eq!(corrupt(&pc, &spec(CorruptionKind::GaussianNoise, 0.0)).unwrap(), pc);
    }

    #[test]
    fn noise_kinds_keep_count_and_label() {
        let pc = sphere(100);
        for kind in [
            CorruptionKind::UniformNoise,
            CorruptionKind::GaussianNoise,
            CorruptionKind::ImpulseNoise,
        ] {
            for level in 1..=10 {
                let out = corrupt(&pc, &CorruptionSpec::at_level(kind, level, 3)).unwrap();
                assert_eq!(out.len(), 100);
                assert_eq!(out.label(), pc.label());
            }
        }
    }

    #[test]
    fn uniform_noise_support() {
        let pc = sphere(500);
        let out = corrupt(&pc, &spec(CorruptionKind::UniformNoise, 0.07)).unwrap();
        for (a, b) in pc.points().iter().zip(out.points()) {
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() <= 0.07 + 1e-15);
            }
        }
    }

    #[test]
    fn impulse_moves_exact_count_by_fixed_vector() {
        let pc = sphere(200);
        let out = corrupt(&pc, &spec(CorruptionKind::ImpulseNoise, 0.3)).unwrap();
        let mut moved = 0;
        for (a, b) in pc.points().iter().zip(out.points()) {
            let d = sub3(*b, *a);
            if d != [0.0; 3] {
                moved += 1;
                let s = d[0];
                assert!((s.abs() - 0.1).abs() < 1e-12);
                assert!((d[1] - s).abs() < 1e-12 && (d[2] - s).abs() < 1e-12);
            }
        }
        assert_eq!(moved, 60);
    }

    #[test]
    fn background_outlier_counts_and_support() {
        let pc = sphere(1024);
        let out = corrupt(&pc, &spec(CorruptionKind::BackgroundOutliers, 0.1)).unwrap();
        assert_eq!(out.len(), 1126);
        assert_eq!(&out.points()[..1024], pc.points());
        for p in &out.points()[1024..] {
            assert!(p.iter().all(|c| (-1.0..=1.0).contains(c)));
        }
    }

    #[test]
    fn ball_outliers_lie_on_sphere() {
        let pc = sphere(1024);
        let mut s = spec(CorruptionKind::BallOutliers, 0.5);
        s.extra.fraction = Some(0.5);
        let out = corrupt(&pc, &s).unwrap();
        assert_eq!(out.len(), 1024 + 512);
        for p in &out.points()[1024..] {
            assert!((norm3(*p) - 0.5).abs() < 1e-9);
        }
        let default = corrupt(&pc, &CorruptionSpec::at_level(CorruptionKind::BallOutliers, 10, 1));
        assert_eq!(default.unwrap().len(), 1024 + 102);
    }

    #[test]
    fn upsampling_copies_with_bounded_jitter() {
        let pc = sphere(300);
        let out = corrupt(&pc, &spec(CorruptionKind::UpsamplingOutliers, 0.4)).unwrap();
        assert_eq!(out.len(), 420);
        assert_eq!(&out.points()[..300], pc.points());
        for p in &out.points()[300..] {
            let near = pc.points().iter().any(|q| {
                (0..3).all(|k| (p[k] - q[k]).abs() <= UPSAMPLING_JITTER + 1e-15)
            });
            assert!(near);
        }
    }

    #[test]
    fn corruption_is_deterministic_in_seed() {
        let pc = sphere(128);
        for kind in CorruptionKind::ALL {
            let s = if kind.has_levels() {
                CorruptionSpec::at_level(kind, 5, 9)
            } else {
                let p = match kind {
                    CorruptionKind::Cutout => 10.0,
                    CorruptionKind::DensityDecrease => 0.5,
                    _ => 0.4,
                };
                CorruptionSpec::with_param(kind, p, 9)
            };
            assert_eq!(corrupt(&pc, &s).unwrap(), corrupt(&pc, &s).unwrap(), "{kind}");
        }
        let a = corrupt(&pc, &CorruptionSpec::at_level(CorruptionKind::GaussianNoise, 5, 1));
        let b = corrupt(&pc, &CorruptionSpec::at_level(CorruptionKind::GaussianNoise, 5, 2));
        assert_ne!(a.unwrap(), b.unwrap());
    }

    #[test]
    fn rotation_properties() {
        let pc = sphere(64);
        let axis = [0.0, 0.6, 0.8];
        assert_eq!(rotate(&pc, axis, 0.0).unwrap(), pc);
        let full = rotate(&pc, axis, std::f64::consts::TAU).unwrap();
        for (a, b) in pc.points().iter().zip(full.points()) {
            assert!(norm3(sub3(*a, *b)) < 1e-12);
        }
        let r = rotate(&pc, axis, 0.7).unwrap();
        let p = pc.points();
        let q = r.points();
        for i in 0..p.len() {
            for j in 0..p.len() {
                let d0 = norm3(sub3(p[i], p[j]));
                let d1 = norm3(sub3(q[i], q[j]));
                assert!((d0 - d1).abs() < 1e-12);
            }
        }
        assert!(rotate(&pc, [0.0; 3], 1.0).is_err());
        let m = axis_angle_matrix(axis, 0.7).unwrap();
        assert!((mat3_det(&m) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shear_properties() {
        let pc = PointCloud::new(vec![[0.0, 0.0, 1.0], [1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(shear(&pc, 0.0), pc);
        assert_eq!(shear(&pc, 0.5).points()[0], [0.5, 0.5, 1.0]);
        let f = 0.5;
        let map = [[1.0, 0.0, f], [0.0, 1.0, f], [0.0, 0.0, 1.0]];
        assert_eq!(mat3_det(&map), 1.0);
    }

    #[test]
    fn density_and_cutout_contracts() {
        let pc = sphere(1024);
        let mut rng = SeededRng::new(4);
        assert_eq!(density_decrease(&pc, 1.0, &mut rng).unwrap(), pc);
        let half = density_decrease(&pc, 0.5, &mut rng).unwrap();
        assert_eq!(half.len(), 512);
        assert!(half.points().iter().all(|p| pc.points().contains(p)));
        assert_eq!(cutout(&pc, 3, 0, &mut rng).unwrap(), pc);
        let cut = cutout(&pc, 2, 50, &mut rng).unwrap();
        assert_eq!(cut.len(), 924);
        assert!(cut.points().iter().all(|p| pc.points().contains(p)));
        assert!(matches!(cutout(&pc, 2, 512, &mut rng), Err(Error::WouldEmpty)));
        let tiny = PointCloud::new(vec![[0.0; 3]]).unwrap();
        assert!(matches!(density_decrease(&tiny, 0.5, &mut rng), Err(Error::WouldEmpty)));
    }

    #[test]
    fn cutout_removes_nearest_neighbours_of_anchor() {
        let pts: Vec<[f64; 3]> = (0..10).map(|i| [i as f64, 0.0, 0.0]).collect();
        let pc = PointCloud::new(pts).unwrap();
        let out = cutout(&pc, 1, 3, &mut SeededRng::new(2)).unwrap();
        let removed: Vec<f64> = pc
            .points()
            .iter()
            .filter(|p| !out.points().contains(p))
            .map(|p| p[0])
            .collect();
        assert_eq!(removed.len(), 3);
        // contiguous run on a line
        assert!(removed[2] - removed[0] <= 3.0);
    }

    #[test]
    fn spec_json_shape() {
        let mut s = CorruptionSpec::at_level(CorruptionKind::BallOutliers, 3, 5);
        s.extra.fraction = Some(0.5);
        let json = serde_json::to_value(&s).unwrap();
        assert_eq!(json["kind"], "ball_outliers");
        assert_eq!(json["level"], 3);
        assert_eq!(json["extra"]["fraction"], 0.5);
        let back: CorruptionSpec = serde_json::from_value(json).unwrap();
        assert_eq!(back, s);
        assert_eq!("background".parse::<CorruptionKind>().unwrap(), CorruptionKind::BackgroundOutliers);
    }
}
