//! Classification head over pooled features:
//! `FC(K,512) → BN → ReLU → FC(512,256) → Dropout → BN → ReLU → FC(256,C)`.
//!
//! Gradients are written out by hand; the encoder in front of the head is
//! frozen, so nothing upstream of the first linear layer needs them.

mod checkpoint;
mod evaluate;
mod train;

use serde::{Deserialize, Serialize};

pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use evaluate::{evaluate, evaluate_features, EvalReport};
pub use train::{
    augment, extract_features, fit, fit_clouds, labels_of, train, train_on_clouds, Augmentation,
    EpochStats, LrSchedule, OptimizerKind, TrainConfig,
};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::SeededRng;
use crate::scalar::Real;

pub const DEFAULT_HIDDEN: [usize; 2] = [512, 256];
pub const DEFAULT_DROPOUT: f64 = 0.4;
pub const DEFAULT_BN_MOMENTUM: f64 = 0.1;
pub const DEFAULT_BN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Train,
    Eval,
}

/// `y = x Wᵀ + b` with `W` stored out × in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Linear<T> {
    pub weight: Matrix<T>,
    pub bias: Vec<T>,
}

impl<T: Real> Linear<T> {
    /// Uniform in `±1/√in` for weights and bias.
    pub fn init(dim_in: usize, dim_out: usize, rng: &mut SeededRng) -> Self {
        let bound = 1.0 / (dim_in as f64).sqrt();
        let weight = Matrix::from_fn(dim_out, dim_in, |_, _| T::lit(rng.uniform_in(-bound, bound)));
        let bias = (0..dim_out)
            .map(|_| T::lit(rng.uniform_in(-bound, bound)))
            .collect();
        Self { weight, bias }
    }

    pub fn dim_in(&self) -> usize {
        self.weight.cols()
    }

    pub fn dim_out(&self) -> usize {
        self.weight.rows()
    }

    pub fn forward(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        let mut y = x.matmul_bt(&self.weight)?;
        for r in 0..y.rows() {
            for (v, &b) in y.row_mut(r).iter_mut().zip(&self.bias) {
                *v = *v + b;
            }
        }
        Ok(y)
    }
}

/// Per-feature batch normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct BatchNorm<T> {
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
    pub momentum: f64,
    pub eps: f64,
}

pub(crate) struct BnCache<T> {
    xhat: Matrix<T>,
    inv_std: Vec<T>,
}

impl<T: Real> BatchNorm<T> {
    pub fn new(dim: usize, momentum: f64, eps: f64) -> Self {
        Self {
            gamma: vec![T::one(); dim],
            beta: vec![T::zero(); dim],
            running_mean: vec![T::zero(); dim],
            running_var: vec![T::one(); dim],
            momentum,
            eps,
        }
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    fn affine(&self, x: &Matrix<T>, mean: &[T], inv_std: &[T]) -> (Matrix<T>, Matrix<T>) {
        let xhat = Matrix::from_fn(x.rows(), x.cols(), |r, c| (x.get(r, c) - mean[c]) * inv_std[c]);
        let y = Matrix::from_fn(x.rows(), x.cols(), |r, c| {
            self.gamma[c] * xhat.get(r, c) + self.beta[c]
        });
        (y, xhat)
    }

    pub fn forward_eval(&self, x: &Matrix<T>) -> Matrix<T> {
        let eps = T::lit(self.eps);
        let inv: Vec<T> = self
            .running_var
            .iter()
            .map(|&v| T::one() / (v + eps).sqrt())
            .collect();
        self.affine(x, &self.running_mean, &inv).0
    }

    fn batch_stats(x: &Matrix<T>) -> (Vec<T>, Vec<T>) {
        let n = T::lit(x.rows() as f64);
        let mut mean = vec![T::zero(); x.cols()];
        for row in x.iter_rows() {
            for (m, &v) in mean.iter_mut().zip(row) {
                *m = *m + v;
            }
        }
        mean.iter_mut().for_each(|m| *m = *m / n);
        let mut var = vec![T::zero(); x.cols()];
        for row in x.iter_rows() {
            for ((s, &v), &m) in var.iter_mut().zip(row).zip(&mean) {
                *s = *s + (v - m) * (v - m);
            }
        }
        var.iter_mut().for_each(|s| *s = *s / n);
        (mean, var)
    }

    /// Normalizes with batch statistics without touching the running ones.
    pub fn forward_batch(&self, x: &Matrix<T>) -> Matrix<T> {
        self.forward_batch_cached(x).0
    }

    fn forward_batch_cached(&self, x: &Matrix<T>) -> (Matrix<T>, BnCache<T>, Vec<T>, Vec<T>) {
        let (mean, var) = Self::batch_stats(x);
        let eps = T::lit(self.eps);
        let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
        let (y, xhat) = self.affine(x, &mean, &inv_std);
        (y, BnCache { xhat, inv_std }, mean, var)
    }

    /// Batch-statistics forward pass that also updates the running estimates
    /// (unbiased variance).
    pub(crate) fn forward_train(&mut self, x: &Matrix<T>) -> (Matrix<T>, BnCache<T>) {
        let (y, cache, mean, var) = self.forward_batch_cached(x);
        let m = T::lit(self.momentum);
        let n = x.rows() as f64;
        let unbias = T::lit(if n > 1.0 { n / (n - 1.0) } else { 1.0 });
        for c in 0..self.dim() {
            self.running_mean[c] = (T::one() - m) * self.running_mean[c] + m * mean[c];
            self.running_var[c] = (T::one() - m) * self.running_var[c] + m * var[c] * unbias;
        }
        (y, cache)
    }

    /// Replaces the running estimates with the statistics of `x` (unbiased
    /// variance).
    pub fn set_population_stats(&mut self, x: &Matrix<T>) {
        let (mean, var) = Self::batch_stats(x);
        let n = x.rows() as f64;
        let unbias = T::lit(if n > 1.0 { n / (n - 1.0) } else { 1.0 });
        self.running_mean = mean;
        self.running_var = var.into_iter().map(|v| v * unbias).collect();
    }

    /// Returns `(dx, dgamma, dbeta)`.
    pub(crate) fn backward(&self, dy: &Matrix<T>, cache: &BnCache<T>) -> (Matrix<T>, Vec<T>, Vec<T>) {
        let (rows, cols) = dy.shape();
        let n = T::lit(rows as f64);
        let mut dgamma = vec![T::zero(); cols];
        let mut dbeta = vec![T::zero(); cols];
        for r in 0..rows {
            for c in 0..cols {
                let g = dy.get(r, c);
                dbeta[c] = dbeta[c] + g;
                dgamma[c] = dgamma[c] + g * cache.xhat.get(r, c);
            }
        }
        let dx = Matrix::from_fn(rows, cols, |r, c| {
            let k = self.gamma[c] * cache.inv_std[c] / n;
            k * (n * dy.get(r, c) - dbeta[c] - cache.xhat.get(r, c) * dgamma[c])
        });
        (dx, dgamma, dbeta)
    }
}

/// Bernoulli keep-mask with inverted-dropout scaling: each entry is `0`
/// with probability `p`, otherwise `1 / (1 - p)`.
pub fn dropout_mask<T: Real>(rows: usize, cols: usize, p: f64, rng: &mut SeededRng) -> Matrix<T> {
    let keep = T::lit(1.0 / (1.0 - p));
    Matrix::from_fn(rows, cols, |_, _| {
        if rng.bernoulli(p) {
            T::zero()
        } else {
            keep
        }
    })
}

fn relu<T: Real>(x: &Matrix<T>) -> Matrix<T> {
    x.map(|v| v.max(T::zero()))
}

fn hadamard<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    Matrix::from_fn(a.rows(), a.cols(), |r, c| a.get(r, c) * b.get(r, c))
}

fn relu_grad<T: Real>(upstream: &Matrix<T>, pre: &Matrix<T>) -> Matrix<T> {
    Matrix::from_fn(pre.rows(), pre.cols(), |r, c| {
        if pre.get(r, c) > T::zero() {
            upstream.get(r, c)
        } else {
            T::zero()
        }
    })
}

fn column_sums<T: Real>(x: &Matrix<T>) -> Vec<T> {
    let mut out = vec![T::zero(); x.cols()];
    for row in x.iter_rows() {
        for (o, &v) in out.iter_mut().zip(row) {
            *o = *o + v;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ClassifierModel<T> {
    pub fc1: Linear<T>,
    pub bn1: BatchNorm<T>,
    pub fc2: Linear<T>,
    pub bn2: BatchNorm<T>,
    pub fc3: Linear<T>,
    pub dropout: f64,
    pub mode: Mode,
}

/// Gradients in [`ClassifierModel::parameters_mut`] order.
pub(crate) type Gradients<T> = Vec<Vec<T>>;

impl<T: Real> ClassifierModel<T> {
    pub fn new(
        dim_in: usize,
        hidden: [usize; 2],
        num_classes: usize,
        dropout: f64,
        bn_momentum: f64,
        bn_eps: f64,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        if dim_in == 0 || num_classes == 0 || hidden.contains(&0) {
            return Err(Error::InvalidArgument("layer widths must be positive".into()));
        }
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::InvalidArgument(format!("dropout {dropout} is outside [0, 1)")));
        }
        Ok(Self {
            fc1: Linear::init(dim_in, hidden[0], rng),
            bn1: BatchNorm::new(hidden[0], bn_momentum, bn_eps),
            fc2: Linear::init(hidden[0], hidden[1], rng),
            bn2: BatchNorm::new(hidden[1], bn_momentum, bn_eps),
            fc3: Linear::init(hidden[1], num_classes, rng),
            dropout,
            mode: Mode::Train,
        })
    }

    pub fn dim_in(&self) -> usize {
        self.fc1.dim_in()
    }

    pub fn num_classes(&self) -> usize {
        self.fc3.dim_out()
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    fn check_input(&self, x: &Matrix<T>) -> Result<()> {
        if x.cols() != self.dim_in() {
            return Err(Error::DimensionMismatch {
                expected: self.dim_in(),
                actual: x.cols(),
            });
        }
        if !x.is_finite() {
            return Err(Error::NonFinite("classifier features".into()));
        }
        Ok(())
    }

    /// Logits honoring the mode flag: in train mode, batch statistics and a
    /// fresh dropout mask drawn from `rng` (running statistics untouched).
    pub fn forward(&self, x: &Matrix<T>, rng: &mut SeededRng) -> Result<Matrix<T>> {
        if self.mode == Mode::Eval {
            return self.logits(x);
        }
        self.check_input(x)?;
        let h1 = relu(&self.bn1.forward_batch(&self.fc1.forward(x)?));
        let z2 = self.fc2.forward(&h1)?;
        let d2 = hadamard(&z2, &dropout_mask(z2.rows(), z2.cols(), self.dropout, rng));
        let h2 = relu(&self.bn2.forward_batch(&d2));
        self.fc3.forward(&h2)
    }

    /// Eval-mode logits: running BN statistics, no dropout.
    pub fn logits(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        self.check_input(x)?;
        let h1 = relu(&self.bn1.forward_eval(&self.fc1.forward(x)?));
        let h2 = relu(&self.bn2.forward_eval(&self.fc2.forward(&h1)?));
        self.fc3.forward(&h2)
    }

    /// Recomputes both BN layers' running statistics from eval-mode
    /// activations of `x`, weights frozen. The moving averages lag behind
    /// the weights; this removes that lag.
    pub fn recalibrate_batch_norm(&mut self, x: &Matrix<T>) -> Result<()> {
        self.check_input(x)?;
        let z1 = self.fc1.forward(x)?;
        self.bn1.set_population_stats(&z1);
        let z2 = self.fc2.forward(&relu(&self.bn1.forward_eval(&z1)))?;
        self.bn2.set_population_stats(&z2);
        Ok(())
    }

    /// Arg-max class per row (first index on ties).
    pub fn predict(&self, x: &Matrix<T>) -> Result<Vec<usize>> {
        let logits = self.logits(x)?;
        Ok(logits.iter_rows().map(argmax).collect())
    }

    pub(crate) fn parameters_mut(&mut self) -> [&mut [T]; 10] {
        [
            self.fc1.weight.as_mut_slice(),
            &mut self.fc1.bias,
            &mut self.bn1.gamma,
            &mut self.bn1.beta,
            self.fc2.weight.as_mut_slice(),
            &mut self.fc2.bias,
            &mut self.bn2.gamma,
            &mut self.bn2.beta,
            self.fc3.weight.as_mut_slice(),
            &mut self.fc3.bias,
        ]
    }

    /// One forward/backward pass in train mode. Updates BN running
    /// statistics and returns `(mean loss, correct count, gradients)`.
    pub(crate) fn forward_backward(
        &mut self,
        x: &Matrix<T>,
        labels: &[usize],
        rng: &mut SeededRng,
    ) -> Result<(f64, usize, Gradients<T>)> {
        self.check_input(x)?;
        let z1 = self.fc1.forward(x)?;
        let (a1, c1) = self.bn1.forward_train(&z1);
        let h1 = relu(&a1);
        let z2 = self.fc2.forward(&h1)?;
        let mask = dropout_mask(z2.rows(), z2.cols(), self.dropout, rng);
        let d2 = hadamard(&z2, &mask);
        let (a2, c2) = self.bn2.forward_train(&d2);
        let h2 = relu(&a2);
        let logits = self.fc3.forward(&h2)?;

        let (loss, correct, dlogits) = softmax_cross_entropy(&logits, labels)?;

        let dw3 = dlogits.matmul_at(&h2)?;
        let db3 = column_sums(&dlogits);
        let dh2 = dlogits.matmul(&self.fc3.weight)?;
        let (dd2, dg2, dbeta2) = self.bn2.backward(&relu_grad(&dh2, &a2), &c2);
        let dz2 = hadamard(&dd2, &mask);
        let dw2 = dz2.matmul_at(&h1)?;
        let db2 = column_sums(&dz2);
        let dh1 = dz2.matmul(&self.fc2.weight)?;
        let (dz1, dg1, dbeta1) = self.bn1.backward(&relu_grad(&dh1, &a1), &c1);
        let dw1 = dz1.matmul_at(x)?;
        let db1 = column_sums(&dz1);
        let grads = vec![
            dw1.into_vec(),
            db1,
            dg1,
            dbeta1,
            dw2.into_vec(),
            db2,
            dg2,
            dbeta2,
            dw3.into_vec(),
            db3,
        ];
        Ok((loss, correct, grads))
    }
}

pub(crate) fn argmax<T: Real>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Mean loss, number of correct arg-max predictions and `d loss / d logits`.
pub(crate) fn softmax_cross_entropy<T: Real>(
    logits: &Matrix<T>,
    labels: &[usize],
) -> Result<(f64, usize, Matrix<T>)> {
    let (rows, cols) = logits.shape();
    if labels.len() != rows {
        return Err(Error::DimensionMismatch {
            expected: rows,
            actual: labels.len(),
        });
    }
    let n = T::lit(rows as f64);
    let mut grad = Matrix::zeros(rows, cols);
    let mut loss = 0.0;
    let mut correct = 0;
    for (r, &y) in labels.iter().enumerate() {
        let row = logits.row(r);
        if y >= cols {
            return Err(Error::InvalidArgument(format!("label {y} exceeds {cols} classes")));
        }
        if argmax(row) == y {
            correct += 1;
        }
        let m = row.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
        let exps: Vec<T> = row.iter().map(|&v| (v - m).exp()).collect();
        let z: T = exps.iter().copied().sum();
        loss += (z.ln() + m - row[y]).as_f64();
        for (c, e) in exps.into_iter().enumerate() {
            let p = e / z;
            let target = if c == y { T::one() } else { T::zero() };
            grad.set(r, c, (p - target) / n);
        }
    }
    Ok((loss / rows as f64, correct, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_model(seed: u64) -> ClassifierModel<f64> {
        ClassifierModel::new(6, [8, 5], 3, 0.4, 0.1, 1e-5, &mut SeededRng::new(seed)).unwrap()
    }

    fn random(rng: &mut SeededRng, r: usize, c: usize) -> Matrix<f64> {
        Matrix::from_fn(r, c, |_, _| rng.normal())
    }

    #[test]
    fn eval_forward_is_deterministic() {
        let mut m = small_model(1);
        m.set_mode(Mode::Eval);
        let x = random(&mut SeededRng::new(2), 4, 6);
        let mut r1 = SeededRng::new(3);
        let mut r2 = SeededRng::new(4);
        assert_eq!(m.forward(&x, &mut r1).unwrap(), m.forward(&x, &mut r2).unwrap());
        assert_eq!(m.logits(&x).unwrap(), m.forward(&x, &mut r1).unwrap());
    }

    #[test]
    fn train_forward_uses_dropout() {
        let m = small_model(1);
        let x = random(&mut SeededRng::new(2), 4, 6);
        let mut rng = SeededRng::new(3);
        let a = m.forward(&x, &mut rng).unwrap();
        let b = m.forward(&x, &mut rng).unwrap();
        assert_ne!(a, b);
        assert!(a.is_finite());
    }

    #[test]
    fn dropout_drops_forty_percent() {
        let mut rng = SeededRng::new(8);
        let mask = dropout_mask::<f64>(10_000, 256, 0.4, &mut rng);
        let zeros = mask.as_slice().iter().filter(|&&v| v == 0.0).count();
        let frac = zeros as f64 / mask.as_slice().len() as f64;
        assert!((frac - 0.4).abs() < 0.02);
        assert!(mask.as_slice().iter().all(|&v| v == 0.0 || (v - 1.0 / 0.6).abs() < 1e-15));
    }

    #[test]
    fn zero_final_layer_gives_zero_logits() {
        let mut m = small_model(3);
        m.fc3.weight = Matrix::zeros(3, 5);
        m.fc3.bias = vec![0.0; 3];
        m.set_mode(Mode::Eval);
        let logits = m.logits(&Matrix::zeros(2, 6)).unwrap();
        assert!(logits.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let m = small_model(3);
        assert!(matches!(
            m.logits(&Matrix::zeros(2, 5)),
            Err(Error::DimensionMismatch { expected: 6, actual: 5 })
        ));
    }

    #[test]
    fn gradients_match_finite_differences() {
        // dropout off so the loss is a deterministic function of the weights
        let model =
            ClassifierModel::<f64>::new(5, [7, 6], 3, 0.0, 0.0, 1e-5, &mut SeededRng::new(9))
                .unwrap();
        let mut rng = SeededRng::new(10);
        let x = random(&mut rng, 6, 5);
        let labels = vec![0, 1, 2, 1, 0, 2];
        let (_, _, grads) = model
            .clone()
            .forward_backward(&x, &labels, &mut SeededRng::new(0))
            .unwrap();
        let loss_at = |m: &ClassifierModel<f64>| {
            let mut m = m.clone();
            m.forward_backward(&x, &labels, &mut SeededRng::new(0)).unwrap().0
        };
        let h = 1e-6;
        for (p, g) in grads.iter().enumerate() {
            for i in (0..g.len()).step_by(3) {
                let mut plus = model.clone();
                plus.parameters_mut()[p][i] += h;
                let mut minus = model.clone();
                minus.parameters_mut()[p][i] -= h;
                let numeric = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
                assert!(
                    (numeric - g[i]).abs() < 1e-6 * (1.0 + numeric.abs()),
                    "param {p}[{i}]: numeric {numeric} analytic {}",
                    g[i]
                );
            }
        }
    }

    #[test]
    fn batchnorm_running_stats_track_stationary_input() {
        let mut bn = BatchNorm::<f64>::new(4, 0.1, 1e-5);
        let mut rng = SeededRng::new(11);
        let draw = |rng: &mut SeededRng, rows: usize| {
            Matrix::from_fn(rows, 4, |_, c| 3.0 + (c as f64 + 1.0) * rng.normal())
        };
        for _ in 0..300 {
            bn.forward_train(&draw(&mut rng, 64));
        }
        let held = draw(&mut rng, 1024);
        let eval = bn.forward_eval(&held);
        let batch = bn.forward_batch(&held);
        for c in 0..4 {
            let ce = eval.column(c);
            let cb = batch.column(c);
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            let std = |v: &[f64]| {
                let m = mean(v);
                (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
            };
            assert!((mean(&ce) - mean(&cb)).abs() < 0.1);
            assert!((std(&ce) / std(&cb) - 1.0).abs() < 0.1);
        }
    }

    #[test]
    fn recalibration_sets_population_statistics() {
        let mut rng = SeededRng::new(12);
        let mut model = small_model(4);
        let x = random(&mut rng, 64, model.dim_in());
        model.recalibrate_batch_norm(&x).unwrap();
        let z1 = model.fc1.forward(&x).unwrap();
        for c in 0..z1.cols() {
            let col = z1.column(c);
            let mean = col.iter().sum::<f64>() / 64.0;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 63.0;
            assert!((model.bn1.running_mean[c] - mean).abs() < 1e-12);
            assert!((model.bn1.running_var[c] - var).abs() < 1e-12);
        }
        // eval-mode first-layer activations are now standardized
        let out = model.bn1.forward_eval(&z1);
        for c in 0..out.cols() {
            let m = out.column(c).iter().sum::<f64>() / 64.0;
            assert!(m.abs() < 1e-9);
        }
    }

    #[test]
    fn softmax_cross_entropy_uniform_logits() {
        let logits = Matrix::<f64>::zeros(2, 4);
        let (loss, _, grad) = softmax_cross_entropy(&logits, &[1, 3]).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-12);
        assert!((grad.get(0, 1) - (0.25 - 1.0) / 2.0).abs() < 1e-12);
        assert!(softmax_cross_entropy(&logits, &[1, 4]).is_err());
    }
}
