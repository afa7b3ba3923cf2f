//! Rigid registration by damped Gauss-Newton on pooled global features.
//!
//! The unknown is a rigid transform `T` mapping the source onto the target;
//! each step linearizes `feature(exp(δ) T · source)` in the twist `δ` with
//! central differences, so any encoder/pooling pair can be plugged in.

mod se3;
mod solver;
mod sweep;

pub use crate::pooling::global_feature;
pub use se3::{se3_exp, se3_log, RigidTransform, Twist, LOG_PI_MARGIN};
pub use solver::{
    feature_jacobian, register, IterationRecord, RegistrationOptions, RegistrationResult,
    Termination, DAMPING_CEILING, DAMPING_FLOOR, REORTHONORMALIZE_EVERY,
};
pub use sweep::{
    noise_sweep, random_perturbation, trial_problem, PerturbationBounds, SuccessCriterion,
    SweepConfig, SweepRow, SweepTable, TrialRecord,
};
