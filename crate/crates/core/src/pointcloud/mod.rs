//! Point-cloud data model, file ingestion, normalization and synthetic shapes.

mod io;
mod manifest;
mod mesh;
mod shapes;

use serde::{Deserialize, Serialize};

pub use io::{load_xyz, parse_xyz, save_xyz, write_xyz};
pub use manifest::{load_manifest, write_manifest, write_manifest_with_hash, DatasetEntry};
pub use mesh::{load_off, parse_off, sample_surface, TriangleMesh};
pub use shapes::{make_shape, make_shape_instance, synthetic_dataset, InstanceVariation, ShapeKind};

use crate::error::{Error, Result};
use crate::linalg::{norm3, scale3, sub3, Vec3};
use crate::scalar::Real;

/// An ordered list of points in 3-space with an optional class label.
///
/// Always holds at least one point and only finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PointCloud<T> {
    points: Vec<Vec3<T>>,
    label: Option<usize>,
}

impl<T: Real> PointCloud<T> {
    pub fn new(points: Vec<Vec3<T>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("point cloud has no points".into()));
        }
        if let Some(i) = points
            .iter()
            .position(|p| !p.iter().all(|c| c.is_finite()))
        {
            return Err(Error::NonFinite(format!("point {i} has a non-finite coordinate")));
        }
        Ok(Self {
            points,
            label: None,
        })
    }

    pub fn with_label(mut self, label: Option<usize>) -> Self {
        self.label = label;
        self
    }

    pub fn points(&self) -> &[Vec3<T>] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Vec3<T>> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false; kept for API symmetry with collections.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn label(&self) -> Option<usize> {
        self.label
    }

    pub fn centroid(&self) -> Vec3<T> {
        let mut acc = [T::zero(); 3];
        for p in &self.points {
            for k in 0..3 {
                acc[k] = acc[k] + p[k];
            }
        }
        scale3(acc, T::lit(self.points.len() as f64).recip())
    }

    pub fn max_norm(&self) -> T {
        self.points
            .iter()
            .map(|&p| norm3(p))
            .fold(T::zero(), T::max)
    }

    /// Centers the cloud on its centroid and scales it into the unit ball.
    ///
    /// If every point coincides, the cloud is moved to the origin and no
    /// scaling is applied.
    pub fn normalize(&self) -> Self {
        let first = self.points[0];
        if self.points.iter().all(|&p| p == first) {
            return Self {
                points: vec![[T::zero(); 3]; self.points.len()],
                label: self.label,
            };
        }
        let c = self.centroid();
        let centered: Vec<Vec3<T>> = self.points.iter().map(|&p| sub3(p, c)).collect();
        let r = centered.iter().map(|&p| norm3(p)).fold(T::zero(), T::max);
        let points = if r > T::zero() {
            centered.into_iter().map(|p| scale3(p, r.recip())).collect()
        } else {
            centered
        };
        Self {
            points,
            label: self.label,
        }
    }

    /// Point `i` of the result is point `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            points: perm.iter().map(|&i| self.points[i]).collect(),
            label: self.label,
        }
    }

    pub fn map_points(&self, f: impl Fn(Vec3<T>) -> Vec3<T>) -> Self {
        Self {
            points: self.points.iter().map(|&p| f(p)).collect(),
            label: self.label,
        }
    }

    /// Replaces the point list, keeping the label. Fails on an empty list.
    pub fn with_points(&self, points: Vec<Vec3<T>>) -> Result<Self> {
        Ok(Self::new(points)?.with_label(self.label))
    }

    pub fn cast<U: Real>(&self) -> PointCloud<U> {
        PointCloud {
            points: self
                .points
                .iter()
                .map(|p| p.map(|c| U::lit(c.as_f64())))
                .collect(),
            label: self.label,
        }
    }
}
