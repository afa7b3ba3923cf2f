use serde::{Deserialize, Serialize};

use super::se3::{se3_exp, RigidTransform, Twist};
use crate::encoders::Encoder;
use crate::error::{Error, Result};
use crate::linalg::{solve_spd, Matrix};
use crate::pointcloud::PointCloud;
use crate::pooling::{global_feature, PoolingKind};
use crate::scalar::Real;

pub const DAMPING_FLOOR: f64 = 1e-9;
/// Damping above this means no descent direction is left.
pub const DAMPING_CEILING: f64 = 1e12;
pub const REORTHONORMALIZE_EVERY: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegistrationOptions {
    pub max_iters: usize,
    /// Stop once the twist update is shorter than this.
    pub tol: f64,
    /// Central-difference step on each twist coordinate.
    pub step: f64,
    /// Initial Levenberg damping; ×10 after a rejected step, ÷10 after an
    /// accepted one, never below [`DAMPING_FLOOR`] unless it starts at 0.
    pub damping: f64,
}

impl Default for RegistrationOptions {
    fn default() -> Self {
        Self {
            max_iters: 50,
            tol: 1e-7,
            step: 1e-3,
            damping: 1e-6,
        }
    }
}

impl RegistrationOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.tol > 0.0) || !(self.step > 0.0) || !(self.damping >= 0.0) {
            return Err(Error::Config(
                "tol and step must be positive and damping non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIterations,
    /// Damping hit its ceiling without finding a non-increasing step.
    Stalled,
    /// Normal equations not positive definite (zero damping).
    Singular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub residual: f64,
    pub step_norm: f64,
    pub damping: f64,
    pub rejected_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RegistrationResult<T> {
    /// Maps the source onto the target.
    pub estimate: RigidTransform<T>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub termination: Termination,
    pub rotation_error_deg: Option<f64>,
    pub translation_error: Option<f64>,
    pub trace: Vec<IterationRecord>,
}

impl<T: Real> RegistrationResult<T> {
    /// Fills the error fields against a known transform.
    pub fn score(&mut self, truth: &RigidTransform<T>) {
        let (rot, trans) = self.estimate.error_to(truth);
        self.rotation_error_deg = Some(rot.as_f64());
        self.translation_error = Some(trans.as_f64());
    }
}

fn unit_twist<T: Real>(j: usize, h: T) -> Twist<T> {
    let mut xi = [T::zero(); 6];
    xi[j] = h;
    xi
}

/// K × 6 central-difference Jacobian of the pooled feature under left
/// perturbations `exp(±h eⱼ)` of the cloud (ω columns first, then v).
pub fn feature_jacobian<T: Real>(
    pc: &PointCloud<T>,
    encoder: &Encoder<T>,
    pooling: PoolingKind,
    step: T,
) -> Result<Matrix<T>> {
    if !(step > T::zero()) {
        return Err(Error::InvalidArgument("jacobian step must be positive".into()));
    }
    let k = encoder.dim_out();
    let mut jac = Matrix::zeros(k, 6);
    let two_h = step + step;
    for j in 0..6 {
        let plus = global_feature(&se3_exp(&unit_twist(j, step)).apply_cloud(pc), encoder, pooling)?;
        let minus = global_feature(&se3_exp(&unit_twist(j, -step)).apply_cloud(pc), encoder, pooling)?;
        for r in 0..k {
            jac.set(r, j, (plus.values[r] - minus.values[r]) / two_h);
        }
    }
    if !jac.is_finite() {
        return Err(Error::NonFinite("feature jacobian".into()));
    }
    Ok(jac)
}

fn residual<T: Real>(
    target: &[T],
    moved: &PointCloud<T>,
    encoder: &Encoder<T>,
    pooling: PoolingKind,
) -> Result<(Vec<T>, f64)> {
    let f = global_feature(moved, encoder, pooling)?;
    let r: Vec<T> = target.iter().zip(&f.values).map(|(&a, &b)| a - b).collect();
    let norm = r.iter().map(|v| v.as_f64() * v.as_f64()).sum::<f64>().sqrt();
    if !norm.is_finite() {
        return Err(Error::NonFinite("registration residual".into()));
    }
    Ok((r, norm))
}

/// Damped Gauss-Newton on the pooled-feature residual
/// `feature(target) − feature(T · source)`, updating `T ← exp(Δ) T`.
pub fn register<T: Real>(
    source: &PointCloud<T>,
    target: &PointCloud<T>,
    encoder: &Encoder<T>,
    pooling: PoolingKind,
    opts: &RegistrationOptions,
) -> Result<RegistrationResult<T>> {
    opts.validate()?;
    let target_feature = global_feature(target, encoder, pooling)?.values;
    let step = T::lit(opts.step);
    let mut estimate = RigidTransform::identity();
    let mut compositions = 0usize;
    let (mut r, mut res) = residual(&target_feature, source, encoder, pooling)?;
    let mut lambda = opts.damping;
    let mut trace = Vec::new();
    let mut termination = Termination::MaxIterations;
    let mut iterations = 0;

    while iterations < opts.max_iters {
        iterations += 1;
        let moved = estimate.apply_cloud(source);
        let jac = feature_jacobian(&moved, encoder, pooling, step)?;
        let jtj = jac.matmul_at(&jac)?;
        let jtr = jac.transpose().matvec(&r)?;
        let mut rejected = 0;
        let outcome = loop {
            let mut a = jtj.clone();
            for d in 0..6 {
                a.set(d, d, a.get(d, d) + T::lit(lambda));
            }
            let delta = match solve_spd(&a, &jtr) {
                Ok(d) => d,
                Err(Error::Singular) if lambda == 0.0 => break None,
                Err(Error::Singular) => {
                    lambda = (lambda * 10.0).max(DAMPING_FLOOR);
                    rejected += 1;
                    if lambda > DAMPING_CEILING {
                        break Some((Termination::Stalled, 0.0));
                    }
                    continue;
                }
                Err(e) => return Err(e),
            };
            let norm = delta.iter().map(|v| v.as_f64() * v.as_f64()).sum::<f64>().sqrt();
            let twist: Twist<T> = [delta[0], delta[1], delta[2], delta[3], delta[4], delta[5]];
            let mut candidate = se3_exp(&twist).compose(&estimate);
            if (compositions + 1).is_multiple_of(REORTHONORMALIZE_EVERY) {
                candidate = candidate.orthonormalized();
            }
            let (r_new, res_new) =
                residual(&target_feature, &candidate.apply_cloud(source), encoder, pooling)?;
            if res_new <= res {
                estimate = candidate;
                compositions += 1;
                r = r_new;
                res = res_new;
                if lambda > 0.0 {
                    lambda = (lambda / 10.0).max(DAMPING_FLOOR);
                }
                break Some((Termination::Converged, norm));
            }
            if norm < opts.tol {
                // no further descent at this resolution
                break Some((Termination::Converged, norm));
            }
            rejected += 1;
            lambda = (lambda * 10.0).max(DAMPING_FLOOR);
            if lambda > DAMPING_CEILING {
                break Some((Termination::Stalled, norm));
            }
        };
        let Some((status, norm)) = outcome else {
            termination = Termination::Singular;
            break;
        };
        trace.push(IterationRecord {
            iteration: iterations,
            residual: res,
            step_norm: norm,
            damping: lambda,
            rejected_steps: rejected,
        });
        if status == Termination::Stalled {
            termination = Termination::Stalled;
            break;
        }
        if norm < opts.tol {
            termination = Termination::Converged;
            break;
        }
    }
    Ok(RegistrationResult {
        estimate,
        iterations,
        residual: res,
        converged: termination == Termination::Converged,
        termination,
        rotation_error_deg: None,
        translation_error: None,
        trace,
    })
}
