//! Symmetric aggregation of per-point embeddings and the reductions that
//! rewrite mean and max pooling as sums.
//!
//! Column reductions sort each column before accumulating, so every kind is
//! bit-for-bit invariant to row order (floating-point addition is not
//! associative, and a plain running sum would leak the input order).

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoders::Encoder;
use crate::error::{Error, Result};
use crate::linalg::{dot3, Matrix};
use crate::pointcloud::PointCloud;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolingKind {
    Max,
    Mean,
    Median,
    Sum,
}

impl PoolingKind {
    pub const ALL: [PoolingKind; 4] = [
        PoolingKind::Max,
        PoolingKind::Mean,
        PoolingKind::Median,
        PoolingKind::Sum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PoolingKind::Max => "max",
            PoolingKind::Mean => "mean",
            PoolingKind::Median => "median",
            PoolingKind::Sum => "sum",
        }
    }
}

impl fmt::Display for PoolingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PoolingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown pooling kind {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PooledFeature<T> {
    pub values: Vec<T>,
    pub kind: PoolingKind,
}

impl<T: Real> PooledFeature<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Euclidean distance between two feature vectors.
    pub fn distance(&self, other: &Self) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt()
    }
}

fn sorted_columns<T: Real>(x: &Matrix<T>) -> Vec<Vec<T>> {
    let t = x.transpose();
    let mut cols: Vec<Vec<T>> = t.iter_rows().map(<[T]>::to_vec).collect();
    cols.par_iter_mut()
        .for_each(|c| c.sort_unstable_by(|a, b| a.total_order(b)));
    cols
}

fn sum_sorted<T: Real>(c: &[T]) -> T {
    c.iter().fold(T::zero(), |acc, &v| acc + v)
}

fn check_nonempty<T: Real>(x: &Matrix<T>) -> Result<()> {
    if x.rows() == 0 || x.cols() == 0 {
        return Err(Error::Empty("pooling input has no rows or columns".into()));
    }
    Ok(())
}

/// Column-wise reduction of an N × K matrix. Median of even N averages the
/// two middle values.
pub fn pool<T: Real>(x: &Matrix<T>, kind: PoolingKind) -> Result<PooledFeature<T>> {
    check_nonempty(x)?;
    let n = x.rows();
    let values = match kind {
        PoolingKind::Max => {
            let mut out = x.row(0).to_vec();
            for row in x.iter_rows().skip(1) {
                for (o, &v) in out.iter_mut().zip(row) {
                    if v > *o {
                        *o = v;
                    }
                }
            }
            out
        }
        PoolingKind::Sum => sorted_columns(x).iter().map(|c| sum_sorted(c)).collect(),
        PoolingKind::Mean => {
            let inv = T::lit(n as f64);
            sorted_columns(x).iter().map(|c| sum_sorted(c) / inv).collect()
        }
        PoolingKind::Median => sorted_columns(x)
            .iter()
            .map(|c| {
                if n % 2 == 1 {
                    c[n / 2]
                } else {
                    (c[n / 2 - 1] + c[n / 2]) / T::lit(2.0)
                }
            })
            .collect(),
    };
    Ok(PooledFeature { values, kind })
}

/// Pooled embedding of a whole cloud.
pub fn global_feature<T: Real>(
    pc: &PointCloud<T>,
    encoder: &Encoder<T>,
    kind: PoolingKind,
) -> Result<PooledFeature<T>> {
    pool(&encoder.encode_cloud(pc)?, kind)
}

/// Sum of the rows of `X / N`, the sum-pooling form of the mean.
pub fn mean_as_sum<T: Real>(x: &Matrix<T>) -> Result<PooledFeature<T>> {
    check_nonempty(x)?;
    let n = T::lit(x.rows() as f64);
    let scaled = x.map(|v| v / n);
    let values = sorted_columns(&scaled).iter().map(|c| sum_sorted(c)).collect();
    Ok(PooledFeature {
        values,
        kind: PoolingKind::Mean,
    })
}

/// Zeroes everything but the first maximum of each column.
pub fn max_mask<T: Real>(x: &Matrix<T>) -> Result<Matrix<T>> {
    check_nonempty(x)?;
    let mut arg = vec![0usize; x.cols()];
    for (r, row) in x.iter_rows().enumerate().skip(1) {
        for (c, &v) in row.iter().enumerate() {
            if v > x.get(arg[c], c) {
                arg[c] = r;
            }
        }
    }
    let mut masked = Matrix::zeros(x.rows(), x.cols());
    for (c, &r) in arg.iter().enumerate() {
        masked.set(r, c, x.get(r, c));
    }
    Ok(masked)
}

/// Column sums of [`max_mask`].
pub fn max_as_masked_sum<T: Real>(x: &Matrix<T>) -> Result<PooledFeature<T>> {
    let masked = max_mask(x)?;
    let values = sorted_columns(&masked).iter().map(|c| sum_sorted(c)).collect();
    Ok(PooledFeature {
        values,
        kind: PoolingKind::Max,
    })
}

/// Offsets and scale that turn max pooling into mean pooling of a ReLU.
#[derive(Debug, Clone, PartialEq)]
pub struct ReluMeanMax<T> {
    pub feature: PooledFeature<T>,
    /// Per-column threshold strictly between the top two values.
    pub offset: Vec<T>,
    pub scale: T,
}

/// Reconstructs the column max as `mean(ReLU((X - b) / c))`.
///
/// With column max `m` and runner-up `n`, take
/// `c = ½ min (m - n) / (N m)` and `b = m (1 - cN)`; only the maximum then
/// survives the ReLU, contributing `N m / N`. Needs `m > 0` and `m > n` in
/// every column.
pub fn max_as_relu_mean<T: Real>(x: &Matrix<T>) -> Result<ReluMeanMax<T>> {
    check_nonempty(x)?;
    let n_rows = x.rows();
    let nf = n_rows as f64;
    let mut tops = Vec::with_capacity(x.cols());
    let mut c = f64::INFINITY;
    for col in 0..x.cols() {
        let mut m = f64::NEG_INFINITY;
        let mut second = f64::NEG_INFINITY;
        for r in 0..n_rows {
            let v = x.get(r, col).as_f64();
            if v > m {
                second = m;
                m = v;
            } else if v > second {
                second = v;
            }
        }
        if !(m > 0.0) {
            return Err(Error::Infeasible {
                column: col,
                reason: format!("column maximum {m} is not positive"),
            });
        }
        if n_rows > 1 && !(m > second) {
            return Err(Error::Infeasible {
                column: col,
                reason: "column maximum is not unique".into(),
            });
        }
        if n_rows > 1 {
            c = c.min((m - second) / (nf * m));
        }
        tops.push(m);
    }
    let c = if c.is_finite() { 0.5 * c } else { 0.5 };
    let scale = T::lit(c);
    let offset: Vec<T> = tops.iter().map(|&m| T::lit(m * (1.0 - c * nf))).collect();
    let relu = Matrix::from_fn(n_rows, x.cols(), |r, col| {
        ((x.get(r, col) - offset[col]) / scale).max(T::zero())
    });
    let mut feature = pool(&relu, PoolingKind::Mean)?;
    feature.kind = PoolingKind::Max;
    Ok(ReluMeanMax {
        feature,
        offset,
        scale,
    })
}

/// Mean-pools the linear embedding `x -> A x + b` and, separately, applies
/// the same map to the centroid. Returns `(pooled, mapped_centroid)`.
pub fn linear_ppe_mean_collapse<T: Real>(
    a: &Matrix<T>,
    b: &[T],
    pc: &PointCloud<T>,
) -> Result<(PooledFeature<T>, PooledFeature<T>)> {
    if a.cols() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            actual: a.cols(),
        });
    }
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            actual: b.len(),
        });
    }
    let linear = |p: [T; 3]| -> Vec<T> {
        (0..a.rows())
            .map(|k| {
                let w = a.row(k);
                dot3([w[0], w[1], w[2]], p) + b[k]
            })
            .collect()
    };
    let rows: Vec<Vec<T>> = pc.points().iter().map(|&p| linear(p)).collect();
    let pooled = pool(&Matrix::from_rows(&rows)?, PoolingKind::Mean)?;
    let centre = PooledFeature {
        values: linear(pc.centroid()),
        kind: PoolingKind::Mean,
    };
    Ok((pooled, centre))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use proptest::prelude::*;

    fn m(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn random(rng: &mut SeededRng, r: usize, c: usize) -> Matrix<f64> {
        Matrix::from_fn(r, c, |_, _| rng.normal())
    }

    #[test]
    fn basic_reductions() {
        let x = m(&[&[1.0, 2.0], &[3.0, 0.0]]);
        assert_eq!(pool(&x, PoolingKind::Max).unwrap().values, vec![3.0, 2.0]);
        assert_eq!(pool(&x, PoolingKind::Mean).unwrap().values, vec![2.0, 1.0]);
        assert_eq!(pool(&x, PoolingKind::Sum).unwrap().values, vec![4.0, 2.0]);
        let y = m(&[&[1.0], &[2.0], &[3.0], &[4.0]]);
        assert_eq!(pool(&y, PoolingKind::Median).unwrap().values, vec![2.5]);
        let z = m(&[&[5.0], &[-1.0], &[3.0]]);
        assert_eq!(pool(&z, PoolingKind::Median).unwrap().values, vec![3.0]);
    }

    #[test]
    fn empty_input_is_an_error() {
        let x = Matrix::<f64>::zeros(0, 4);
        for kind in PoolingKind::ALL {
            assert!(matches!(pool(&x, kind), Err(Error::Empty(_))));
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in PoolingKind::ALL {
            assert_eq!(kind.name().parse::<PoolingKind>().unwrap(), kind);
        }
        assert!("mode".parse::<PoolingKind>().is_err());
    }

    #[test]
    fn mean_as_sum_matches_mean() {
        let mut rng = SeededRng::new(3);
        for _ in 0..100 {
            let x = random(&mut rng, 8, 16);
            let a = mean_as_sum(&x).unwrap().values;
            let b = pool(&x, PoolingKind::Mean).unwrap().values;
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).abs() < 1e-12);
            }
        }
        let one = m(&[&[1.5, -2.0, 7.0]]);
        assert_eq!(mean_as_sum(&one).unwrap().values, vec![1.5, -2.0, 7.0]);
        let zero = Matrix::<f64>::zeros(5, 3);
        assert_eq!(mean_as_sum(&zero).unwrap().values, vec![0.0; 3]);
    }

    #[test]
    fn masked_sum_examples() {
        let x = m(&[&[1.0, 5.0], &[3.0, 2.0]]);
        assert_eq!(max_mask(&x).unwrap(), m(&[&[0.0, 5.0], &[3.0, 0.0]]));
        assert_eq!(max_as_masked_sum(&x).unwrap().values, vec![3.0, 5.0]);
        let tie = m(&[&[4.0], &[4.0], &[4.0]]);
        assert_eq!(max_mask(&tie).unwrap(), m(&[&[4.0], &[0.0], &[0.0]]));
        assert_eq!(max_as_masked_sum(&tie).unwrap().values, vec![4.0]);
    }

    #[test]
    fn masked_sum_equals_max_on_random_matrices() {
        let mut rng = SeededRng::new(4);
        for _ in 0..1000 {
            let r = 1 + rng.index(12);
            let c = 1 + rng.index(6);
            let x = random(&mut rng, r, c);
            assert_eq!(
                max_as_masked_sum(&x).unwrap().values,
                pool(&x, PoolingKind::Max).unwrap().values
            );
        }
    }

    #[test]
    fn relu_mean_reconstructs_small_example() {
        let x = m(&[&[1.0, 2.0], &[0.5, 1.0]]);
        let r = max_as_relu_mean(&x).unwrap();
        assert!((r.feature.values[0] - 1.0).abs() < 1e-9);
        assert!((r.feature.values[1] - 2.0).abs() < 1e-9);
        // gaps: (1 - 0.5)/(2·1) = 0.25 and (2 - 1)/(2·2) = 0.25
        assert_eq!(r.scale, 0.125);
        assert_eq!(r.offset, vec![0.75, 1.5]);
    }

    #[test]
    fn relu_mean_matches_max_on_positive_matrices() {
        let mut rng = SeededRng::new(5);
        for _ in 0..1000 {
            let x = Matrix::from_fn(16, 32, |_, _| rng.uniform_in(0.01, 3.0));
            let r = max_as_relu_mean(&x).unwrap();
            let direct = pool(&x, PoolingKind::Max).unwrap();
            for (u, v) in r.feature.values.iter().zip(&direct.values) {
                assert!((u - v).abs() < 1e-9);
            }
            assert!(r.scale > 0.0);
        }
    }

    #[test]
    fn relu_mean_infeasible_cases() {
        let zero_max = m(&[&[0.0, 1.0], &[-1.0, 0.5]]);
        assert!(matches!(
            max_as_relu_mean(&zero_max),
            Err(Error::Infeasible { column: 0, .. })
        ));
        let constant = m(&[&[1.0, 2.0], &[1.0, 1.0]]);
        assert!(matches!(
            max_as_relu_mean(&constant),
            Err(Error::Infeasible { column: 0, .. })
        ));
        let single = m(&[&[2.0, 3.0]]);
        assert_eq!(max_as_relu_mean(&single).unwrap().feature.values, vec![2.0, 3.0]);
    }

    #[test]
    fn linear_ppe_collapses_to_centroid() {
        let mut rng = SeededRng::new(6);
        let a = random(&mut rng, 16, 3);
        let b: Vec<f64> = (0..16).map(|_| rng.normal()).collect();
        let pc = PointCloud::new((0..64).map(|_| rng.unit_vector()).collect()).unwrap();
        let (pooled, centre) = linear_ppe_mean_collapse(&a, &b, &pc).unwrap();
        for (u, v) in pooled.values.iter().zip(&centre.values) {
            assert!((u - v).abs() < 1e-12);
        }

        let sym = PointCloud::new(vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]).unwrap();
        let (p, c) = linear_ppe_mean_collapse(&a, &b, &sym).unwrap();
        for ((u, v), w) in p.values.iter().zip(&c.values).zip(&b) {
            assert!((u - w).abs() < 1e-12 && (v - w).abs() < 1e-12);
        }

        let other = PointCloud::new(vec![[0.0, 2.0, 0.0], [0.0, -2.0, 0.0]]).unwrap();
        let (q, _) = linear_ppe_mean_collapse(&a, &b, &other).unwrap();
        for (u, v) in p.values.iter().zip(&q.values) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn max_pooled_linear_ppe_is_not_a_function_of_the_centroid() {
        let a = m(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let max_linear = |pts: &[[f64; 3]]| {
            let rows: Vec<Vec<f64>> = pts.iter().map(|p| a.matvec(p).unwrap()).collect();
            pool(&Matrix::from_rows(&rows).unwrap(), PoolingKind::Max).unwrap()
        };
        let p = [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]];
        let q = [[2.0, 0.0, 0.0], [-2.0, 0.0, 0.0]];
        let cp = PointCloud::new(p.to_vec()).unwrap().centroid();
        let cq = PointCloud::new(q.to_vec()).unwrap().centroid();
        assert_eq!(cp, cq);
        assert_ne!(max_linear(&p).values, max_linear(&q).values);
    }

    #[test]
    fn adversarial_row_sensitivity() {
        let mut rng = SeededRng::new(7);
        let n = 20;
        let x = random(&mut rng, n, 8);
        let delta = 5.0;
        let maxes = pool(&x, PoolingKind::Max).unwrap().values;
        let mut rows: Vec<Vec<f64>> = x.iter_rows().map(<[f64]>::to_vec).collect();
        let outlier: Vec<f64> = maxes.iter().map(|v| v + delta).collect();
        rows.push(outlier.clone());
        let y = Matrix::from_rows(&rows).unwrap();
        let dmax = pool(&y, PoolingKind::Max)
            .unwrap()
            .values
            .iter()
            .zip(&maxes)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!((dmax - delta).abs() < 1e-12);
        let before = pool(&x, PoolingKind::Mean).unwrap().values;
        let after = pool(&y, PoolingKind::Mean).unwrap().values;
        let dmean = before
            .iter()
            .zip(&after)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let row_mag = rows
            .iter()
            .flatten()
            .map(|v| v.abs())
            .fold(0.0, f64::max);
        assert!(dmean <= 2.0 * row_mag / (n as f64 + 1.0));
        // exact: mean change in column k is (outlier_k - mean_k) / (N + 1)
        for k in 0..8 {
            let expect = (outlier[k] - before[k]) / (n as f64 + 1.0);
            assert!((after[k] - before[k] - expect).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn pooling_is_exactly_permutation_invariant(
            data in prop::collection::vec(-1e3f64..1e3, 1..60),
            seed in any::<u64>(),
        ) {
            let cols = 3;
            let rows = data.len().div_ceil(cols);
            let mut data = data;
            data.resize(rows * cols, 0.25);
            let x = Matrix::from_vec(rows, cols, data).unwrap();
            let mut perm: Vec<usize> = (0..rows).collect();
            SeededRng::new(seed).shuffle(&mut perm);
            let y = x.select_rows(&perm);
            for kind in PoolingKind::ALL {
                prop_assert_eq!(pool(&x, kind).unwrap(), pool(&y, kind).unwrap());
            }
        }
    }
}
