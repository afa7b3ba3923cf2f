//! Randomly initialized self-attention stack applied on top of RFF
//! embeddings: `F_1 = AT_1(F_e)`, `F_i = AT_i(F_{i-1})`, output
//! `concat(F_1, F_2, F_3, F_4)`.
//!
//! Each layer is single-head scaled dot-product attention with square
//! query/key/value projections drawn i.i.d. `N(0, 1/width)`, softmax over
//! keys, no feed-forward sublayer and no normalization.
//!
//! Reductions over the key axis run in a canonical order (points sorted
//! lexicographically by input coordinates), so permuting the input cloud
//! permutes the output rows bit-for-bit.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::SeededRng;
use crate::scalar::Real;

pub const ATTENTION_LAYERS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionLayer<T> {
    /// Projections stored `out × in`.
    pub query: Matrix<T>,
    pub key: Matrix<T>,
    pub value: Matrix<T>,
}

impl<T: Real> AttentionLayer<T> {
    fn random(width: usize, rng: &mut SeededRng) -> Self {
        let std = 1.0 / (width as f64).sqrt();
        let mut draw = || Matrix::from_fn(width, width, |_, _| T::lit(std * rng.normal()));
        let query = draw();
        let key = draw();
        let value = draw();
        Self { query, key, value }
    }

    /// Rows of `input` must already be in canonical order.
    fn forward(&self, input: &Matrix<T>) -> Result<Matrix<T>> {
        let q = input.matmul_bt(&self.query)?;
        let k = input.matmul_bt(&self.key)?;
        let v = input.matmul_bt(&self.value)?;
        let inv_sqrt = T::lit((self.query.rows() as f64).sqrt().recip());
        let mut scores = q.matmul_bt(&k)?;
        for i in 0..scores.rows() {
            let row = scores.row_mut(i);
            let m = row
                .iter()
                .fold(T::neg_infinity(), |acc, &s| acc.max(s * inv_sqrt));
            let mut z = T::zero();
            for s in row.iter_mut() {
                *s = (*s * inv_sqrt - m).exp();
                z = z + *s;
            }
            for s in row.iter_mut() {
                *s = *s / z;
            }
        }
        scores.matmul(&v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionParams<T> {
    width: usize,
    layers: Vec<AttentionLayer<T>>,
}

impl<T: Real> AttentionParams<T> {
    pub fn random(width: usize, rng: &mut SeededRng) -> Self {
        Self {
            width,
            layers: (0..ATTENTION_LAYERS)
                .map(|_| AttentionLayer::random(width, rng))
                .collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn layers(&self) -> &[AttentionLayer<T>] {
        &self.layers
    }

    pub fn dim_out(&self) -> usize {
        self.width * self.layers.len()
    }

    /// Runs the stack on `embedded` (N × width), whose rows belong to
    /// `points`; returns N × (4·width) with `F_1..F_4` concatenated per row.
    pub fn forward(&self, points: &[[T; 3]], embedded: &Matrix<T>) -> Result<Matrix<T>> {
        if embedded.cols() != self.width {
            return Err(Error::DimensionMismatch {
                expected: self.width,
                actual: embedded.cols(),
            });
        }
        let order = canonical_order(points);
        let mut current = embedded.select_rows(&order);
        let mut outputs = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            current = layer.forward(&current)?;
            outputs.push(current.clone());
        }
        let sorted = Matrix::hconcat(&outputs)?;
        let mut inverse = vec![0usize; order.len()];
        for (pos, &orig) in order.iter().enumerate() {
            inverse[orig] = pos;
        }
        Ok(sorted.select_rows(&inverse))
    }
}

fn lexicographic<T: Real>(a: &[T; 3], b: &[T; 3]) -> Ordering {
    a[0].total_order(&b[0])
        .then_with(|| a[1].total_order(&b[1]))
        .then_with(|| a[2].total_order(&b[2]))
}

/// Indices of `points` sorted lexicographically by coordinates. Ties are
/// identical points, whose rows are identical at every layer.
pub fn canonical_order<T: Real>(points: &[[T; 3]]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&i, &j| lexicographic(&points[i], &points[j]));
    idx
}
