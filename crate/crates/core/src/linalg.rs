//! Small dense linear algebra: 3-vectors, 3x3 matrices, a row-major matrix,
//! and a Cholesky solver for the registration normal equations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub type Vec3<T> = [T; 3];
pub type Mat3<T> = [[T; 3]; 3];

#[inline]
pub fn add3<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub3<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale3<T: Real>(a: Vec3<T>, s: T) -> Vec3<T> {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot3<T: Real>(a: Vec3<T>, b: Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross3<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm3<T: Real>(a: Vec3<T>) -> T {
    dot3(a, a).sqrt()
}

pub fn vec3_from_f64<T: Real>(v: [f64; 3]) -> Vec3<T> {
    [T::lit(v[0]), T::lit(v[1]), T::lit(v[2])]
}

pub fn mat3_identity<T: Real>() -> Mat3<T> {
    let (o, z) = (T::one(), T::zero());
    [[o, z, z], [z, o, z], [z, z, o]]
}

pub fn mat3_mul<T: Real>(a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut c = [[T::zero(); 3]; 3];
    for (i, row) in c.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    c
}

#[inline]
pub fn mat3_vec<T: Real>(a: &Mat3<T>, v: Vec3<T>) -> Vec3<T> {
    [dot3(a[0], v), dot3(a[1], v), dot3(a[2], v)]
}

pub fn mat3_transpose<T: Real>(a: &Mat3<T>) -> Mat3<T> {
    let mut t = *a;
    for (i, row) in a.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            t[j][i] = x;
        }
    }
    t
}

pub fn mat3_det<T: Real>(a: &Mat3<T>) -> T {
    dot3(a[0], cross3(a[1], a[2]))
}

pub fn mat3_add<T: Real>(a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut c = *a;
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = c[i][j] + b[i][j];
        }
    }
    c
}

pub fn mat3_scale<T: Real>(a: &Mat3<T>, s: T) -> Mat3<T> {
    a.map(|row| row.map(|x| x * s))
}

pub fn mat3_inverse<T: Real>(a: &Mat3<T>) -> Option<Mat3<T>> {
    let det = mat3_det(a);
    if det == T::zero() || !det.is_finite() {
        return None;
    }
    // rows of the inverse-transpose are cross products of the rows of `a`
    let c0 = cross3(a[1], a[2]);
    let c1 = cross3(a[2], a[0]);
    let c2 = cross3(a[0], a[1]);
    let inv_t = [scale3(c0, det.recip()), scale3(c1, det.recip()), scale3(c2, det.recip())];
    Some(mat3_transpose(&inv_t))
}

/// Skew-symmetric cross-product matrix `[w]x`.
pub fn hat<T: Real>(w: Vec3<T>) -> Mat3<T> {
    let z = T::zero();
    [[z, -w[2], w[1]], [w[2], z, -w[0]], [-w[1], w[0], z]]
}

/// Frobenius distance of `RᵀR` from the identity.
pub fn orthonormality_error<T: Real>(r: &Mat3<T>) -> T {
    let rtr = mat3_mul(&mat3_transpose(r), r);
    let id = mat3_identity::<T>();
    let mut acc = T::zero();
    for i in 0..3 {
        for j in 0..3 {
            let d = rtr[i][j] - id[i][j];
            acc = acc + d * d;
        }
    }
    acc.sqrt()
}

/// Nearest rotation in the polar-decomposition sense, by Newton iteration
/// `R <- (R + R^-T) / 2`. Returns the input unchanged if it is singular.
pub fn orthonormalize<T: Real>(r: &Mat3<T>) -> Mat3<T> {
    let half = T::lit(0.5);
    let mut cur = *r;
    for _ in 0..20 {
        let Some(inv) = mat3_inverse(&cur) else {
            return *r;
        };
        let next = mat3_scale(&mat3_add(&cur, &mat3_transpose(&inv)), half);
        let mut delta = T::zero();
        for i in 0..3 {
            for j in 0..3 {
                delta = delta.max((next[i][j] - cur[i][j]).abs());
            }
        }
        cur = next;
        if delta <= T::epsilon() * T::lit(4.0) {
            break;
        }
    }
    cur
}

/// Dot product with four independent accumulators (fixed order, so results
/// are reproducible).
#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [T::zero(); 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] = acc[0] + a[i] * b[i];
        acc[1] = acc[1] + a[i + 1] * b[i + 1];
        acc[2] = acc[2] + a[i + 2] * b[i + 2];
        acc[3] = acc[3] + a[i + 3] * b[i + 3];
    }
    let mut tail = T::zero();
    for i in 4 * chunks..a.len() {
        tail = tail + a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += alpha * x`
#[inline]
pub fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
}

const PAR_THRESHOLD: usize = 1 << 16;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn column(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks(self.cols.max(1)).take(self.rows)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Row `i` of the result is row `perm[i]` of `self`.
    pub fn select_rows(&self, perm: &[usize]) -> Self {
        let mut data = Vec::with_capacity(perm.len() * self.cols);
        for &p in perm {
            data.extend_from_slice(self.row(p));
        }
        Self {
            rows: perm.len(),
            cols: self.cols,
            data,
        }
    }

    /// Horizontal concatenation.
    pub fn hconcat(parts: &[Matrix<T>]) -> Result<Self> {
        let rows = parts.first().map_or(0, |m| m.rows);
        if let Some(bad) = parts.iter().find(|m| m.rows != rows) {
            return Err(Error::DimensionMismatch {
                expected: rows,
                actual: bad.rows,
            });
        }
        let cols = parts.iter().map(|m| m.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for m in parts {
                data.extend_from_slice(m.row(r));
            }
        }
        Ok(Self { rows, cols, data })
    }

    fn check_inner(expected: usize, actual: usize) -> Result<()> {
        if expected != actual {
            return Err(Error::DimensionMismatch { expected, actual });
        }
        Ok(())
    }

    /// `self · other`
    pub fn matmul(&self, other: &Matrix<T>) -> Result<Matrix<T>> {
        Self::check_inner(self.cols, other.rows)?;
        let mut out = Matrix::zeros(self.rows, other.cols);
        let m = other.cols.max(1);
        let kernel = |(i, out_row): (usize, &mut [T])| {
            for (k, &a) in self.row(i).iter().enumerate() {
                if a != T::zero() {
                    axpy(a, other.row(k), out_row);
                }
            }
        };
        if self.rows * self.cols * other.cols >= PAR_THRESHOLD {
            out.data.par_chunks_mut(m).enumerate().for_each(kernel);
        } else {
            out.data.chunks_mut(m).enumerate().for_each(kernel);
        }
        Ok(out)
    }

    /// `self · otherᵀ`
    pub fn matmul_bt(&self, other: &Matrix<T>) -> Result<Matrix<T>> {
        Self::check_inner(self.cols, other.cols)?;
        let mut out = Matrix::zeros(self.rows, other.rows);
        let m = other.rows.max(1);
        let kernel = |(i, out_row): (usize, &mut [T])| {
            let a = self.row(i);
            for (j, cell) in out_row.iter_mut().enumerate() {
                *cell = dot(a, other.row(j));
            }
        };
        if self.rows * self.cols * other.rows >= PAR_THRESHOLD {
            out.data.par_chunks_mut(m).enumerate().for_each(kernel);
        } else {
            out.data.chunks_mut(m).enumerate().for_each(kernel);
        }
        Ok(out)
    }

    /// `selfᵀ · other`
    pub fn matmul_at(&self, other: &Matrix<T>) -> Result<Matrix<T>> {
        Self::check_inner(self.rows, other.rows)?;
        let mut out = Matrix::zeros(self.cols, other.cols);
        let m = other.cols.max(1);
        let kernel = |(p, out_row): (usize, &mut [T])| {
            for i in 0..self.rows {
                let a = self.get(i, p);
                if a != T::zero() {
                    axpy(a, other.row(i), out_row);
                }
            }
        };
        if self.rows * self.cols * other.cols >= PAR_THRESHOLD {
            out.data.par_chunks_mut(m).enumerate().for_each(kernel);
        } else {
            out.data.chunks_mut(m).enumerate().for_each(kernel);
        }
        Ok(out)
    }

    /// `self · v` for a column vector `v`.
    pub fn matvec(&self, v: &[T]) -> Result<Vec<T>> {
        Self::check_inner(self.cols, v.len())?;
        Ok(self.iter_rows().map(|r| dot(r, v)).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// Solves `a x = b` for symmetric positive-definite `a` (n×n, row-major) by
/// Cholesky factorization. Fails with [`Error::Singular`] when a pivot is not
/// strictly positive.
pub fn solve_spd<T: Real>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: a.cols(),
        });
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: b.len(),
        });
    }
    let mut l = Matrix::<T>::zeros(n, n);
    let scale = (0..n).map(|i| a.get(i, i).abs()).fold(T::zero(), T::max);
    let tiny = scale * T::epsilon() * T::lit(n as f64);
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d = d - l.get(j, k) * l.get(j, k);
        }
        if !(d > tiny) || !d.is_finite() {
            return Err(Error::Singular);
        }
        let d = d.sqrt();
        l.set(j, j, d);
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s = s - l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / d);
        }
    }
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s = s - l.get(i, k) * y[k];
        }
        y[i] = s / l.get(i, i);
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s = s - l.get(k, i) * x[k];
        }
        x[i] = s / l.get(i, i);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &Matrix<f64>, b: &Matrix<f64>) -> Matrix<f64> {
        Matrix::from_fn(a.rows(), b.cols(), |i, j| {
            (0..a.cols()).map(|k| a.get(i, k) * b.get(k, j)).sum()
        })
    }

    #[test]
    fn matmul_variants_agree_with_naive_product() {
        let a = Matrix::from_fn(5, 7, |i, j| (i as f64 * 0.3 - j as f64 * 0.7).sin());
        let b = Matrix::from_fn(7, 4, |i, j| (i as f64 + 2.0 * j as f64).cos());
        let want = naive(&a, &b);
        let got = a.matmul(&b).unwrap();
        let got_bt = a.matmul_bt(&b.transpose()).unwrap();
        let got_at = a.transpose().matmul_at(&b).unwrap();
        for i in 0..5 {
            for j in 0..4 {
                assert!((got.get(i, j) - want.get(i, j)).abs() < 1e-12);
                assert!((got_bt.get(i, j) - want.get(i, j)).abs() < 1e-12);
                assert!((got_at.get(i, j) - want.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn matmul_rejects_mismatched_shapes() {
        let a = Matrix::<f64>::zeros(2, 3);
        let b = Matrix::<f64>::zeros(2, 3);
        assert!(matches!(
            a.matmul(&b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn cholesky_solves_spd_system() {
        let m = Matrix::from_fn(6, 6, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let mut a = m.matmul_at(&m).unwrap();
        for i in 0..6 {
            a.set(i, i, a.get(i, i) + 1.0);
        }
        let x_true = [1.0, -2.0, 0.5, 3.0, 0.0, -1.5];
        let b = a.matvec(&x_true).unwrap();
        let x = solve_spd(&a, &b).unwrap();
        for (u, v) in x.iter().zip(x_true) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn cholesky_reports_singular() {
        let a = Matrix::<f64>::zeros(3, 3);
        assert!(matches!(solve_spd(&a, &[1.0, 0.0, 0.0]), Err(Error::Singular)));
    }

    #[test]
    fn orthonormalize_repairs_drift() {
        let mut r: Mat3<f64> = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]];
        r[0][0] += 1e-4;
        r[2][1] -= 2e-4;
        let q = orthonormalize(&r);
        assert!(orthonormality_error(&q) < 1e-12);
        assert!((mat3_det(&q) - 1.0).abs() < 1e-12);
        assert!((q[1][0] - 1.0).abs() < 1e-3);
    }
}
