//! Gaussian positional encoding over a fixed lattice of centers in
//! `[-1, 1]^D`: `x -> exp(-‖x - c_g‖² / (2σ²))`. Experimental.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPeParams<T> {
    /// `G^D` centers, each of length `D`, in lexicographic lattice order.
    centers: Vec<Vec<T>>,
    sigma: T,
}

impl<T: Real> GaussianPeParams<T> {
    /// `dim_out` must be a perfect `dim_in`-th power.
    pub fn lattice(dim_in: usize, dim_out: usize, sigma: f64) -> Result<Self> {
        if dim_in == 0 {
            return Err(Error::UnsupportedEncoder("gaussian_pe needs dim_in >= 1".into()));
        }
        let per_axis = (dim_out as f64).powf(1.0 / dim_in as f64).round() as usize;
        if per_axis == 0 || per_axis.checked_pow(dim_in as u32) != Some(dim_out) {
            return Err(Error::UnsupportedEncoder(format!(
                "gaussian_pe dim_out {dim_out} is not a {dim_in}-th power"
            )));
        }
        let coord = |k: usize| {
            if per_axis == 1 {
                T::zero()
            } else {
                T::lit(-1.0 + 2.0 * k as f64 / (per_axis - 1) as f64)
            }
        };
        let mut centers = Vec::with_capacity(dim_out);
        for flat in 0..dim_out {
            let mut rem = flat;
            let mut c = vec![T::zero(); dim_in];
            for d in (0..dim_in).rev() {
                c[d] = coord(rem % per_axis);
                rem /= per_axis;
            }
            centers.push(c);
        }
        Ok(Self {
            centers,
            sigma: T::lit(sigma),
        })
    }

    pub fn centers(&self) -> &[Vec<T>] {
        &self.centers
    }

    pub(crate) fn encode_into(&self, x: &[T], out: &mut [T]) {
        let denom = T::lit(2.0) * self.sigma * self.sigma;
        for (o, c) in out.iter_mut().zip(&self.centers) {
            let d2: T = c.iter().zip(x).map(|(&a, &b)| (a - b) * (a - b)).sum();
            *o = (-d2 / denom).exp();
        }
    }
}
