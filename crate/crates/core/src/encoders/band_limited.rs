//! One-dimensional impulse and sinc encodings, and the tensor-product
//! sinusoid basis with its rotated (sum-of-frequencies) form.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Upper bound on `(2B)^D` accepted by [`expand_frequency_grid`].
pub const FREQUENCY_GRID_CAP: u128 = 1_000_000;

/// `sin(πz) / (πz)`, with exact zeros at nonzero integers.
pub fn sinc<T: Real>(z: T) -> T {
    if z == T::zero() {
        return T::one();
    }
    if z == z.round() {
        return T::zero();
    }
    let pz = T::PI() * z;
    pz.sin() / pz
}

/// Bin of `x ∈ (0,1)` on a uniform `grid`-bin partition: `floor(x·grid)`,
/// clamped to the last bin.
pub fn impulse_bin<T: Real>(x: T, grid: usize) -> usize {
    let b = (x * T::lit(grid as f64)).floor().to_usize().unwrap_or(0);
    b.min(grid - 1)
}

fn check_unit_open<T: Real>(x: T, what: &str) -> Result<()> {
    if !(x > T::zero() && x < T::one()) {
        return Err(Error::InvalidArgument(format!("{what} {x} is outside (0, 1)")));
    }
    Ok(())
}

/// Discretized sum of impulses: a histogram on `grid` uniform bins whose
/// entries sum to the number of points.
pub fn encode_impulse<T: Real>(points: &[T], grid: usize) -> Result<Vec<T>> {
    if grid == 0 {
        return Err(Error::InvalidArgument("impulse grid needs at least one bin".into()));
    }
    let mut out = vec![T::zero(); grid];
    for &x in points {
        check_unit_open(x, "point")?;
        let b = impulse_bin(x, grid);
        out[b] = out[b] + T::one();
    }
    Ok(out)
}

/// Nyquist grid `u_k = k / K`, `k = 0..K`.
#[derive(Debug, Clone, PartialEq)]
pub struct SincParams<T> {
    centers: Vec<T>,
    bandwidth: usize,
}

impl<T: Real> SincParams<T> {
    pub fn new(bandwidth: usize) -> Result<Self> {
        if bandwidth < 2 {
            return Err(Error::InvalidArgument(format!(
                "sinc bandwidth must be at least 2, got {bandwidth}"
            )));
        }
        let k = bandwidth as f64;
        Ok(Self {
            centers: (0..bandwidth).map(|i| T::lit(i as f64 / k)).collect(),
            bandwidth,
        })
    }

    pub fn centers(&self) -> &[T] {
        &self.centers
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// `sinc(K(u_k − x))` for every center. `K·u_k = k` exactly, so on-grid
    /// points give an exact one-hot vector up to rounding of `K·x`.
    pub(crate) fn encode_into(&self, x: T, out: &mut [T]) {
        let kx = T::lit(self.bandwidth as f64) * x;
        for (k, o) in out.iter_mut().enumerate() {
            *o = sinc(T::lit(k as f64) - kx);
        }
    }

    /// `Σ_k γ_k sinc(K(t − u_k))`.
    pub fn reconstruct(&self, coefficients: &[T], t: T) -> Result<T> {
        if coefficients.len() != self.bandwidth {
            return Err(Error::DimensionMismatch {
                expected: self.bandwidth,
                actual: coefficients.len(),
            });
        }
        let kt = T::lit(self.bandwidth as f64) * t;
        Ok(coefficients
            .iter()
            .enumerate()
            .map(|(k, &g)| g * sinc(kt - T::lit(k as f64)))
            .sum())
    }
}

/// Coefficients `γ_k = φ(u_k)` of the sinc field `φ(t) = Σ_i sinc(K(t − x_i))`
/// sampled on the Nyquist grid.
pub fn encode_sinc<T: Real>(points: &[T], bandwidth: usize) -> Result<Vec<T>> {
    let params = SincParams::new(bandwidth)?;
    let mut acc = vec![T::zero(); bandwidth];
    let mut row = vec![T::zero(); bandwidth];
    for &x in points {
        params.encode_into(x, &mut row);
        for (a, &r) in acc.iter_mut().zip(&row) {
            *a = *a + r;
        }
    }
    Ok(acc)
}

/// Direct evaluation of `φ(t) = Σ_i sinc(K(t − x_i))`.
pub fn sinc_field<T: Real>(points: &[T], bandwidth: usize, t: T) -> T {
    let k = T::lit(bandwidth as f64);
    points.iter().map(|&x| sinc(k * (t - x))).sum()
}

/// Signed frequency vectors of the rotated sinusoid basis.
///
/// The tensor-product basis `Π_d {cos, sin}(2π i_d x_d)`, `0 ≤ i_d < B`, is
/// rewritten by product-to-sum identities into `cos` and `sin` of
/// `2π (i_1 x_1 ± i_2 x_2 ± … ± i_D x_D)`. Returns one vector per
/// (lattice tuple, sign pattern): `B^D · 2^(D−1)` vectors, which with a
/// `cos` and a `sin` each give the `(2B)^D` basis functions.
pub fn expand_frequency_grid(dim: usize, bandwidth: usize) -> Result<Vec<Vec<i64>>> {
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidArgument(format!(
            "frequency grid dimension must be 1, 2 or 3, got {dim}"
        )));
    }
    if bandwidth == 0 {
        return Err(Error::InvalidArgument("bandwidth must be at least 1".into()));
    }
    let terms = (2 * bandwidth as u128).pow(dim as u32);
    if terms > FREQUENCY_GRID_CAP {
        return Err(Error::ResourceLimit {
            terms,
            cap: FREQUENCY_GRID_CAP,
        });
    }
    let b = bandwidth as i64;
    let tuples = bandwidth.pow(dim as u32);
    let signs = 1usize << (dim - 1);
    let mut out = Vec::with_capacity(tuples * signs);
    for flat in 0..tuples {
        let mut idx = vec![0i64; dim];
        let mut rem = flat as i64;
        for d in (0..dim).rev() {
            idx[d] = rem % b;
            rem /= b;
        }
        for pattern in 0..signs {
            let mut f = idx.clone();
            for d in 1..dim {
                if pattern >> (d - 1) & 1 == 1 {
                    f[d] = -f[d];
                }
            }
            out.push(f);
        }
    }
    Ok(out)
}

/// Number of real basis functions (`cos` and `sin` per vector).
pub fn frequency_grid_basis_count(dim: usize, bandwidth: usize) -> u128 {
    (2 * bandwidth as u128).pow(dim as u32)
}

/// Tensor-product basis in the rotated form.
#[derive(Debug, Clone, PartialEq)]
pub struct SinusoidGridParams<T> {
    dim: usize,
    bandwidth: usize,
    frequencies: Vec<Vec<i64>>,
    /// Multiplier on the base angular frequency `2π`.
    scale: T,
}

impl<T: Real> SinusoidGridParams<T> {
    pub fn new(dim: usize, bandwidth: usize, scale: f64) -> Result<Self> {
        Ok(Self {
            dim,
            bandwidth,
            frequencies: expand_frequency_grid(dim, bandwidth)?,
            scale: T::lit(scale),
        })
    }

    pub fn frequencies(&self) -> &[Vec<i64>] {
        &self.frequencies
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dim_out(&self) -> usize {
        2 * self.frequencies.len()
    }

    /// Keeps `count` of the frequency vectors, chosen uniformly without
    /// replacement and kept in grid order.
    pub fn subsample(&self, count: usize, rng: &mut crate::rng::SeededRng) -> Result<Self> {
        if count == 0 || count > self.frequencies.len() {
            return Err(Error::InvalidArgument(format!(
                "cannot keep {count} of {} frequencies",
                self.frequencies.len()
            )));
        }
        let mut keep = rng.sample_indices(self.frequencies.len(), count);
        keep.sort_unstable();
        Ok(Self {
            frequencies: keep.into_iter().map(|i| self.frequencies[i].clone()).collect(),
            ..self.clone()
        })
    }

    pub(crate) fn encode_into(&self, x: &[T], out: &mut [T]) {
        let n = self.frequencies.len();
        let w = T::lit(2.0 * PI) * self.scale;
        let (cos_part, sin_part) = out.split_at_mut(n);
        for (f, (c, s)) in self.frequencies.iter().zip(cos_part.iter_mut().zip(sin_part)) {
            let phase: T = f.iter().zip(x).map(|(&fi, &xi)| T::lit(fi as f64) * xi).sum();
            let (sn, cs) = (w * phase).sin_cos();
            *c = cs;
            *s = sn;
        }
    }
}

/// Which product of one-dimensional sinusoids is being rewritten.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductTerm {
    CosCos,
    SinCos,
    CosSin,
    SinSin,
}

/// Evaluates a product term both directly and through the product-to-sum
/// identity; returns `(product, rotated)`.
pub fn rotated_identity<T: Real>(term: ProductTerm, u: T, v: T, i: i64, j: i64) -> (T, T) {
    let a = T::lit(i as f64) * u;
    let b = T::lit(j as f64) * v;
    let half = T::lit(0.5);
    match term {
        ProductTerm::CosCos => (a.cos() * b.cos(), half * ((a + b).cos() + (a - b).cos())),
        ProductTerm::SinCos => (a.sin() * b.cos(), half * ((a + b).sin() + (a - b).sin())),
        ProductTerm::CosSin => (a.cos() * b.sin(), half * ((a + b).sin() - (a - b).sin())),
        ProductTerm::SinSin => (a.sin() * b.sin(), half * ((a - b).cos() - (a + b).cos())),
    }
}

/// `(cos(iu)cos(jv), ½[cos(iu+jv) + cos(iu−jv)])`.
pub fn product_vs_rotated_basis<T: Real>(u: T, v: T, i: i64, j: i64) -> (T, T) {
    rotated_identity(ProductTerm::CosCos, u, v, i, j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    #[test]
    fn impulse_single_point_is_one_hot() {
        let e = encode_impulse(&[0.5f64], 10).unwrap();
        let mut want = vec![0.0; 10];
        want[5] = 1.0;
        assert_eq!(e, want);
    }

    #[test]
    fn impulse_is_additive_and_sums_to_count() {
        let e = encode_impulse(&[0.31f64, 0.31, 0.9], 10).unwrap();
        assert_eq!(e[3], 2.0);
        assert_eq!(e.iter().sum::<f64>(), 3.0);
    }

    #[test]
    fn impulse_rejects_out_of_range() {
        assert!(encode_impulse(&[0.0f64], 4).is_err());
        assert!(encode_impulse(&[1.0f64], 4).is_err());
        assert!(encode_impulse(&[-0.2f64], 4).is_err());
    }

    #[test]
    fn impulse_bin_crossing_distance_is_sqrt2_regardless_of_shift() {
        let g = 20;
        let base = encode_impulse(&[0.52f64], g).unwrap();
        for shift in [0.04, 0.1, 0.3] {
            let moved = encode_impulse(&[0.52 + shift], g).unwrap();
            let d: f64 = base
                .iter()
                .zip(&moved)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!((d - 2f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn sinc_on_grid_node_is_one_hot() {
        let k = 16;
        for j in 1..k {
            let x = j as f64 / k as f64;
            let c = encode_sinc(&[x], k).unwrap();
            for (i, v) in c.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-12, "j={j} i={i} v={v}");
            }
        }
    }

    #[test]
    fn sinc_reconstruction_matches_direct_field_for_grid_points() {
        let k = 32;
        let params = SincParams::<f64>::new(k).unwrap();
        let points: Vec<f64> = [3, 7, 7, 20, 31].iter().map(|&j| j as f64 / k as f64).collect();
        let coeffs = encode_sinc(&points, k).unwrap();
        let mut rng = SeededRng::new(4);
        for _ in 0..100 {
            let t = rng.uniform();
            let direct = sinc_field(&points, k, t);
            let rec = params.reconstruct(&coeffs, t).unwrap();
            assert!((direct - rec).abs() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn sinc_rejects_tiny_bandwidth() {
        assert!(encode_sinc(&[0.5f64], 1).is_err());
    }

    #[test]
    fn frequency_grid_base_cases() {
        let g1 = expand_frequency_grid(1, 4).unwrap();
        assert_eq!(g1, vec![vec![0], vec![1], vec![2], vec![3]]);
        assert_eq!(2 * g1.len(), 8);

        let g2 = expand_frequency_grid(2, 2).unwrap();
        assert_eq!(2 * g2.len(), 16);
        assert!(g2.contains(&vec![1, -1]));
        assert!(g2.contains(&vec![1, 1]));

        let g3 = expand_frequency_grid(3, 8).unwrap();
        assert_eq!(2 * g3.len() as u128, frequency_grid_basis_count(3, 8));
        assert_eq!(g3.len(), 8 * 8 * 8 * 4);
    }

    #[test]
    fn frequency_grid_cap_and_dimension_guard() {
        assert!(matches!(
            expand_frequency_grid(3, 51),
            Err(Error::ResourceLimit { .. })
        ));
        assert!(expand_frequency_grid(3, 50).is_ok());
        assert!(expand_frequency_grid(4, 2).is_err());
        assert!(expand_frequency_grid(0, 2).is_err());
    }

    #[test]
    fn trig_identities_hold() {
        let (p, r) = product_vs_rotated_basis(0.3f64, 0.7, 2, 5);
        assert!((p - r).abs() < 1e-12);
        let (p, r) = product_vs_rotated_basis(0.3f64, 0.7, 0, 0);
        assert_eq!((p, r), (1.0, 1.0));
        let mut rng = SeededRng::new(8);
        for term in [
            ProductTerm::CosCos,
            ProductTerm::SinCos,
            ProductTerm::CosSin,
            ProductTerm::SinSin,
        ] {
            for _ in 0..250 {
                let u = rng.uniform_in(-10.0, 10.0);
                let v = rng.uniform_in(-10.0, 10.0);
                let i = rng.index(16) as i64;
                let j = rng.index(16) as i64;
                let (p, r) = rotated_identity(term, u, v, i, j);
                assert!((p - r).abs() < 1e-12, "{term:?}");
            }
        }
    }
}
