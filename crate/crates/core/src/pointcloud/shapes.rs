//! Synthetic shape classes used as a desk-scale stand-in for mesh datasets.
//!
//! Each surface is sampled uniformly and then mapped by a fixed similarity
//! transform that puts the *surface's* area-weighted centroid at the origin
//! and its farthest point on the unit sphere. The transform is computed in
//! closed form, not from the sample, so e.g. every sphere sample has norm 1.
//!
//! Dimensions before normalization: torus major radius 0.7 and minor 0.3;
//! cylinder and cone height 2 and radius 0.7; helix radius 0.7, pitch 0.5,
//! two turns.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::scalar::Real;

use super::PointCloud;

pub const TORUS_MAJOR: f64 = 0.7;
pub const TORUS_MINOR: f64 = 0.3;
pub const CYLINDER_HEIGHT: f64 = 2.0;
pub const CYLINDER_RADIUS: f64 = 0.7;
pub const CONE_HEIGHT: f64 = 2.0;
pub const CONE_RADIUS: f64 = 0.7;
pub const HELIX_RADIUS: f64 = 0.7;
pub const HELIX_PITCH: f64 = 0.5;
pub const HELIX_TURNS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Sphere,
    Cube,
    Torus,
    Cylinder,
    Cone,
    Helix,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 6] = [
        ShapeKind::Sphere,
        ShapeKind::Cube,
        ShapeKind::Torus,
        ShapeKind::Cylinder,
        ShapeKind::Cone,
        ShapeKind::Helix,
    ];

    pub fn class_index(self) -> usize {
        self as usize
    }

    pub fn from_class_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Sphere => "sphere",
            ShapeKind::Cube => "cube",
            ShapeKind::Torus => "torus",
            ShapeKind::Cylinder => "cylinder",
            ShapeKind::Cone => "cone",
            ShapeKind::Helix => "helix",
        }
    }

    /// Offset along z and scale that normalize the raw surface.
    fn normalization(self) -> (f64, f64) {
        match self {
            ShapeKind::Sphere => (0.0, 1.0),
            ShapeKind::Cube => (0.0, 1.0 / 3f64.sqrt()),
            ShapeKind::Torus => (0.0, 1.0 / (TORUS_MAJOR + TORUS_MINOR)),
            ShapeKind::Cylinder => {
                let half = CYLINDER_HEIGHT / 2.0;
                (0.0, 1.0 / (CYLINDER_RADIUS.powi(2) + half * half).sqrt())
            }
            ShapeKind::Cone => {
                let (zc, r) = cone_centroid_and_radius();
                (zc, 1.0 / r)
            }
            ShapeKind::Helix => {
                let half = HELIX_PITCH * HELIX_TURNS / 2.0;
                (0.0, 1.0 / (HELIX_RADIUS.powi(2) + half * half).sqrt())
            }
        }
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShapeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown shape {s:?}")))
    }
}

/// Surface centroid height (base at z = 0) and bounding radius about it for
/// the closed cone.
fn cone_centroid_and_radius() -> (f64, f64) {
    let slant = (CONE_HEIGHT.powi(2) + CONE_RADIUS.powi(2)).sqrt();
    let lateral = PI * CONE_RADIUS * slant;
    let base = PI * CONE_RADIUS * CONE_RADIUS;
    let zc = lateral * (CONE_HEIGHT / 3.0) / (lateral + base);
    let apex = CONE_HEIGHT - zc;
    let rim = (CONE_RADIUS.powi(2) + zc * zc).sqrt();
    (zc, apex.max(rim))
}

fn disk(rng: &mut SeededRng, radius: f64) -> (f64, f64) {
    let r = radius * rng.uniform().sqrt();
    let a = TAU * rng.uniform();
    (r * a.cos(), r * a.sin())
}

fn raw_sample(kind: ShapeKind, rng: &mut SeededRng) -> [f64; 3] {
    match kind {
        ShapeKind::Sphere => rng.unit_vector(),
        ShapeKind::Cube => {
            let face = rng.index(6);
            let u = rng.uniform_in(-1.0, 1.0);
            let v = rng.uniform_in(-1.0, 1.0);
            let s = if face.is_multiple_of(2) { 1.0 } else { -1.0 };
            match face / 2 {
                0 => [s, u, v],
                1 => [u, s, v],
                _ => [u, v, s],
            }
        }
        ShapeKind::Torus => loop {
            let theta = TAU * rng.uniform();
            let accept = (TORUS_MAJOR + TORUS_MINOR * theta.cos()) / (TORUS_MAJOR + TORUS_MINOR);
            if rng.uniform() < accept {
                let phi = TAU * rng.uniform();
                let ring = TORUS_MAJOR + TORUS_MINOR * theta.cos();
                break [ring * phi.cos(), ring * phi.sin(), TORUS_MINOR * theta.sin()];
            }
        },
        ShapeKind::Cylinder => {
            let lateral = TAU * CYLINDER_RADIUS * CYLINDER_HEIGHT;
            let cap = PI * CYLINDER_RADIUS * CYLINDER_RADIUS;
            let pick = rng.uniform() * (lateral + 2.0 * cap);
            let half = CYLINDER_HEIGHT / 2.0;
            if pick < lateral {
                let a = TAU * rng.uniform();
                let z = rng.uniform_in(-half, half);
                [CYLINDER_RADIUS * a.cos(), CYLINDER_RADIUS * a.sin(), z]
            } else {
                let (x, y) = disk(rng, CYLINDER_RADIUS);
                let z = if pick < lateral + cap { half } else { -half };
                [x, y, z]
            }
        }
        ShapeKind::Cone => {
            let slant = (CONE_HEIGHT.powi(2) + CONE_RADIUS.powi(2)).sqrt();
            let lateral = PI * CONE_RADIUS * slant;
            let base = PI * CONE_RADIUS * CONE_RADIUS;
            if rng.uniform() * (lateral + base) < lateral {
                // area grows with the square of the distance from the apex
                let q = rng.uniform().sqrt();
                let a = TAU * rng.uniform();
                let r = CONE_RADIUS * q;
                [r * a.cos(), r * a.sin(), CONE_HEIGHT * (1.0 - q)]
            } else {
                let (x, y) = disk(rng, CONE_RADIUS);
                [x, y, 0.0]
            }
        }
        ShapeKind::Helix => {
            let s = rng.uniform();
            let a = TAU * HELIX_TURNS * s;
            let height = HELIX_PITCH * HELIX_TURNS;
            [
                HELIX_RADIUS * a.cos(),
                HELIX_RADIUS * a.sin(),
                height * (s - 0.5),
            ]
        }
    }
}

/// Samples `n` points uniformly on the named surface (arc length for the
/// helix), normalized as described in the module docs, labelled with the
/// shape's class index.
pub fn make_shape<T: Real>(kind: ShapeKind, n: usize, rng: &mut SeededRng) -> Result<PointCloud<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument("point count must be at least 1".into()));
    }
    let (z_offset, scale) = kind.normalization();
    let points = (0..n)
        .map(|_| {
            let p = raw_sample(kind, rng);
            [
                T::lit(p[0] * scale),
                T::lit(p[1] * scale),
                T::lit((p[2] - z_offset) * scale),
            ]
        })
        .collect();
    Ok(PointCloud::new(points)?.with_label(Some(kind.class_index())))
}

/// Per-instance perturbations applied after normalization: per-axis
/// scaling in the shape frame, then an orientation, then jitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InstanceVariation {
    /// Uniformly random orientation (Haar measure on SO(3)).
    pub random_rotation: bool,
    /// Per-axis scale factors drawn from `[1 − a, 1 + a]`.
    pub anisotropy: f64,
    /// Standard deviation of isotropic Gaussian jitter per point.
    pub jitter: f64,
}

impl Default for InstanceVariation {
    fn default() -> Self {
        Self::NONE
    }
}

impl InstanceVariation {
    pub const NONE: InstanceVariation = InstanceVariation {
        random_rotation: false,
        anisotropy: 0.0,
        jitter: 0.0,
    };

    /// The classification suite: random orientation and ±10% per-axis
    /// scaling, no jitter.
    pub const SUITE: InstanceVariation = InstanceVariation {
        random_rotation: true,
        anisotropy: 0.1,
        jitter: 0.0,
    };

    pub fn is_none(&self) -> bool {
        *self == Self::NONE
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.anisotropy) {
            return Err(Error::InvalidArgument(format!(
                "anisotropy {} must lie in [0, 1)",
                self.anisotropy
            )));
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(Error::InvalidArgument(format!("jitter {} must be non-negative", self.jitter)));
        }
        Ok(())
    }
}

/// Rotation matrix of a uniformly random unit quaternion.
fn random_rotation(rng: &mut SeededRng) -> [[f64; 3]; 3] {
    let q = rng.unit_vector_n(4);
    let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

/// [`make_shape`] followed by the perturbations in `variation`. With
/// [`InstanceVariation::NONE`] the result equals `make_shape` on the same
/// generator state.
pub fn make_shape_instance<T: Real>(
    kind: ShapeKind,
    n: usize,
    variation: &InstanceVariation,
    rng: &mut SeededRng,
) -> Result<PointCloud<T>> {
    variation.validate()?;
    let base: PointCloud<T> = make_shape(kind, n, rng)?;
    if variation.is_none() {
        return Ok(base);
    }
    let a = variation.anisotropy;
    let stretch = [(); 3].map(|_| rng.uniform_in(1.0 - a, 1.0 + a));
    let rot = if variation.random_rotation {
        random_rotation(rng)
    } else {
        [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    };
    let points = base
        .points()
        .iter()
        .map(|p| {
            let s = [0, 1, 2].map(|k| p[k].as_f64() * stretch[k]);
            [0, 1, 2].map(|r| {
                let v = rot[r][0] * s[0] + rot[r][1] * s[1] + rot[r][2] * s[2];
                T::lit(v + variation.jitter * rng.normal())
            })
        })
        .collect();
    base.with_points(points)
}

/// `per_class` instances of each kind in `classes`, labelled by position in
/// `classes`. Instance `i` of class `c` draws from
/// `SeededRng::new(seed).fork(c).fork(i)`; output is ordered instance-major
/// so any prefix is class-balanced.
pub fn synthetic_dataset<T: Real>(
    classes: &[ShapeKind],
    per_class: usize,
    points: usize,
    variation: &InstanceVariation,
    seed: u64,
) -> Result<Vec<PointCloud<T>>> {
    if classes.is_empty() || per_class == 0 {
        return Err(Error::InvalidArgument("synthetic dataset needs classes and instances".into()));
    }
    let root = SeededRng::new(seed);
    let mut out = Vec::with_capacity(classes.len() * per_class);
    for i in 0..per_class {
        for (c, &kind) in classes.iter().enumerate() {
            let mut rng = root.fork(c as u64).fork(i as u64);
            out.push(make_shape_instance(kind, points, variation, &mut rng)?.with_label(Some(c)));
        }
    }
    Ok(out)
}
