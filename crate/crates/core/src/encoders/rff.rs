//! Random Fourier features: `x -> [cos(Wx); sin(Wx)]` with i.i.d. normal `W`.

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::rng::SeededRng;
use crate::scalar::Real;

/// Frequency matrix `W` (F×D) and the standard deviation it was drawn with.
/// No bias and no amplitude normalization: `‖G(x)‖² = F` for every `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct RffParams<T> {
    weights: Matrix<T>,
    scale: f64,
}

impl<T: Real> RffParams<T> {
    pub fn random(frequencies: usize, dim_in: usize, scale: f64, rng: &mut SeededRng) -> Self {
        let weights = Matrix::from_fn(frequencies, dim_in, |_, _| T::lit(scale * rng.normal()));
        Self { weights, scale }
    }

    /// Fixed frequencies, e.g. for analytic checks.
    pub fn from_weights(weights: Matrix<T>, scale: f64) -> Result<Self> {
        if weights.rows() == 0 || weights.cols() == 0 {
            return Err(Error::InvalidArgument("RFF weight matrix is empty".into()));
        }
        if !weights.is_finite() {
            return Err(Error::NonFinite("RFF weights".into()));
        }
        Ok(Self { weights, scale })
    }

    pub fn weights(&self) -> &Matrix<T> {
        &self.weights
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn frequencies(&self) -> usize {
        self.weights.rows()
    }

    pub fn dim_out(&self) -> usize {
        2 * self.weights.rows()
    }

    /// Writes `cos(Wx)` into the first F slots of `out` and `sin(Wx)` into the
    /// last F.
    pub(crate) fn encode_into(&self, x: &[T], out: &mut [T]) {
        let f = self.frequencies();
        let (cos_part, sin_part) = out.split_at_mut(f);
        for (i, (c, s)) in cos_part.iter_mut().zip(sin_part.iter_mut()).enumerate() {
            let (sn, cs) = dot(self.weights.row(i), x).sin_cos();
            *c = cs;
            *s = sn;
        }
    }
}
