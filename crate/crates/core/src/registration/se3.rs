use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    add3, hat, mat3_add, mat3_identity, mat3_mul, mat3_scale, mat3_transpose, mat3_vec, norm3,
    orthonormalize, scale3, sub3, Mat3, Vec3,
};
use crate::pointcloud::PointCloud;
use crate::scalar::Real;

/// Tangent vector `(ω, v)`: rotation generator in radians, then translation.
pub type Twist<T> = [T; 6];

/// Rotation angles closer than this to π are rejected by [`se3_log`].
pub const LOG_PI_MARGIN: f64 = 1e-6;

/// `x ↦ R x + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RigidTransform<T> {
    pub rotation: Mat3<T>,
    pub translation: Vec3<T>,
}

impl<T: Real> Default for RigidTransform<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Real> RigidTransform<T> {
    pub fn identity() -> Self {
        Self {
            rotation: mat3_identity(),
            translation: [T::zero(); 3],
        }
    }

    pub fn new(rotation: Mat3<T>, translation: Vec3<T>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn apply(&self, p: Vec3<T>) -> Vec3<T> {
        add3(mat3_vec(&self.rotation, p), self.translation)
    }

    pub fn apply_cloud(&self, pc: &PointCloud<T>) -> PointCloud<T> {
        pc.map_points(|p| self.apply(p))
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            rotation: mat3_mul(&self.rotation, &other.rotation),
            translation: self.apply(other.translation),
        }
    }

    pub fn inverse(&self) -> Self {
        let rt = mat3_transpose(&self.rotation);
        Self {
            rotation: rt,
            translation: scale3(mat3_vec(&rt, self.translation), -T::one()),
        }
    }

    /// Projects the rotation back onto SO(3).
    pub fn orthonormalized(&self) -> Self {
        Self {
            rotation: orthonormalize(&self.rotation),
            translation: self.translation,
        }
    }

    /// Rotation angle in degrees, robust near 0 and π.
    pub fn rotation_angle_deg(&self) -> T {
        rotation_angle(&self.rotation).to_degrees()
    }

    /// `(rotation error in degrees, translation error)` against `truth`.
    pub fn error_to(&self, truth: &Self) -> (T, T) {
        let rel = mat3_mul(&self.rotation, &mat3_transpose(&truth.rotation));
        (
            rotation_angle(&rel).to_degrees(),
            norm3(sub3(self.translation, truth.translation)),
        )
    }

    pub fn cast<U: Real>(&self) -> RigidTransform<U> {
        RigidTransform {
            rotation: self.rotation.map(|r| r.map(|v| U::lit(v.as_f64()))),
            translation: self.translation.map(|v| U::lit(v.as_f64())),
        }
    }
}

fn vee_skew<T: Real>(r: &Mat3<T>) -> Vec3<T> {
    [r[2][1] - r[1][2], r[0][2] - r[2][0], r[1][0] - r[0][1]]
}

fn rotation_angle<T: Real>(r: &Mat3<T>) -> T {
    let s = norm3(vee_skew(r)) * T::lit(0.5);
    let c = (r[0][0] + r[1][1] + r[2][2] - T::one()) * T::lit(0.5);
    s.atan2(c)
}

/// Coefficients `(sinθ/θ, (1−cosθ)/θ², (θ−sinθ)/θ³)` with series near 0.
fn coefficients<T: Real>(theta: T) -> (T, T, T) {
    let t2 = theta * theta;
    if theta < T::lit(1e-4) {
        (
            T::one() - t2 / T::lit(6.0),
            T::lit(0.5) - t2 / T::lit(24.0),
            T::lit(1.0 / 6.0) - t2 / T::lit(120.0),
        )
    } else {
        let (s, c) = theta.sin_cos();
        (s / theta, (T::one() - c) / t2, (theta - s) / (t2 * theta))
    }
}

/// Rodrigues rotation and `t = V v` with
/// `V = I + (1−cosθ)/θ² [ω]× + (θ−sinθ)/θ³ [ω]×²`.
pub fn se3_exp<T: Real>(xi: &Twist<T>) -> RigidTransform<T> {
    let w = [xi[0], xi[1], xi[2]];
    let v = [xi[3], xi[4], xi[5]];
    let theta = norm3(w);
    let (a, b, c) = coefficients(theta);
    let k = hat(w);
    let k2 = mat3_mul(&k, &k);
    let id = mat3_identity();
    let rotation = mat3_add(&mat3_add(&id, &mat3_scale(&k, a)), &mat3_scale(&k2, b));
    let vmat = mat3_add(&mat3_add(&id, &mat3_scale(&k, b)), &mat3_scale(&k2, c));
    RigidTransform {
        rotation,
        translation: mat3_vec(&vmat, v),
    }
}

/// Inverse of [`se3_exp`] for rotation angles below π.
pub fn se3_log<T: Real>(tf: &RigidTransform<T>) -> Result<Twist<T>> {
    let r = &tf.rotation;
    let theta = rotation_angle(r);
    if !theta.is_finite() {
        return Err(Error::NonFinite("rotation matrix".into()));
    }
    if theta > T::PI() - T::lit(LOG_PI_MARGIN) {
        return Err(Error::LogAtPi);
    }
    let (a, b, _) = coefficients(theta);
    // vee(R − Rᵀ) = 2 sinθ · axis, so ω = vee / (2 sinθ/θ)
    let w = scale3(vee_skew(r), T::one() / (T::lit(2.0) * a));
    let k = hat(w);
    let k2 = mat3_mul(&k, &k);
    // V⁻¹ = I − ½[ω]× + (1 − a / (2b)) / θ² [ω]×²
    let d = if theta < T::lit(1e-4) {
        T::lit(1.0 / 12.0) + theta * theta / T::lit(720.0)
    } else {
        (T::one() - a / (T::lit(2.0) * b)) / (theta * theta)
    };
    let vinv = mat3_add(
        &mat3_add(&mat3_identity(), &mat3_scale(&k, T::lit(-0.5))),
        &mat3_scale(&k2, d),
    );
    let v = mat3_vec(&vinv, tf.translation);
    Ok([w[0], w[1], w[2], v[0], v[1], v[2]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{mat3_det, orthonormality_error};
    use crate::rng::SeededRng;

    #[test]
    fn zero_twist_is_identity() {
        assert_eq!(se3_exp(&[0.0f64; 6]), RigidTransform::identity());
    }

    #[test]
    fn quarter_turn_about_z() {
        let tf = se3_exp(&[0.0, 0.0, std::f64::consts::FRAC_PI_2, 0.0, 0.0, 0.0]);
        let p = tf.apply([1.0, 0.0, 0.0]);
        assert!(norm3(sub3(p, [0.0, 1.0, 0.0])) < 1e-12);
        assert!((tf.rotation_angle_deg() - 90.0).abs() < 1e-12);
    }

    #[test]
    fn exp_log_round_trip() {
        let mut rng = SeededRng::new(1);
        for _ in 0..1000 {
            let axis = rng.unit_vector();
            let angle = rng.uniform_in(0.0, 2.0);
            let xi = [
                axis[0] * angle,
                axis[1] * angle,
                axis[2] * angle,
                rng.normal(),
                rng.normal(),
                rng.normal(),
            ];
            let tf = se3_exp(&xi);
            assert!(orthonormality_error(&tf.rotation) < 1e-12);
            assert!((mat3_det(&tf.rotation) - 1.0).abs() < 1e-12);
            let back = se3_log(&tf).unwrap();
            for k in 0..6 {
                assert!((back[k] - xi[k]).abs() < 1e-9, "{xi:?} {back:?}");
            }
        }
        let tiny: [f64; 6] = [1e-9, -2e-9, 5e-10, 0.1, 0.2, 0.3];
        let back = se3_log(&se3_exp(&tiny)).unwrap();
        for k in 0..6 {
            assert!((back[k] - tiny[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn log_rejects_half_turn() {
        let tf = se3_exp(&[std::f64::consts::PI, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(se3_log(&tf), Err(Error::LogAtPi)));
    }

    #[test]
    fn compose_and_inverse() {
        let a: RigidTransform<f64> = se3_exp(&[0.1, 0.2, -0.3, 0.5, -0.1, 0.2]);
        let b = se3_exp(&[-0.4, 0.1, 0.2, 0.0, 0.3, -0.2]);
        let p = [0.3, -0.7, 0.2];
        let ab = a.compose(&b).apply(p);
        let seq = a.apply(b.apply(p));
        assert!(norm3(sub3(ab, seq)) < 1e-12);
        let id = a.compose(&a.inverse());
        let (rot, trans) = id.error_to(&RigidTransform::identity());
        assert!(rot < 1e-6 && trans < 1e-12);
        let (rot, _) = a.error_to(&b);
        let rel = a.compose(&b.inverse());
        assert!((rot - rel.rotation_angle_deg()).abs() < 1e-9);
    }
}
