//! Randomly initialized deep ReLU per-point embedding,
//! `H_l(x) = ReLU(W_l H_{l-1}(x) + b_l)` with `H_0(x) = x`.

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::rng::SeededRng;
use crate::scalar::Real;

/// Hidden widths of the default embedding; the output width is appended.
pub const DEFAULT_HIDDEN_WIDTHS: [usize; 2] = [64, 128];
pub const DEFAULT_INIT_STD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer<T> {
    /// `out × in`
    pub weight: Matrix<T>,
    pub bias: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReluMlpParams<T> {
    layers: Vec<DenseLayer<T>>,
    init_std: f64,
}

impl<T: Real> ReluMlpParams<T> {
    /// Weights i.i.d. `N(0, init_std²)`, zero biases.
    pub fn random(dim_in: usize, widths: &[usize], init_std: f64, rng: &mut SeededRng) -> Result<Self> {
        if widths.is_empty() || widths.contains(&0) {
            return Err(Error::InvalidArgument(format!("invalid layer widths {widths:?}")));
        }
        let mut layers = Vec::with_capacity(widths.len());
        let mut fan_in = dim_in;
        for &w in widths {
            let weight = Matrix::from_fn(w, fan_in, |_, _| T::lit(init_std * rng.normal()));
            layers.push(DenseLayer {
                weight,
                bias: vec![T::zero(); w],
            });
            fan_in = w;
        }
        Ok(Self { layers, init_std })
    }

    /// Checks that consecutive layer shapes chain.
    pub fn from_layers(layers: Vec<DenseLayer<T>>, init_std: f64) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::InvalidArgument("MLP needs at least one layer".into()))?;
        let mut fan_in = first.weight.cols();
        for l in &layers {
            if l.weight.cols() != fan_in {
                return Err(Error::DimensionMismatch {
                    expected: fan_in,
                    actual: l.weight.cols(),
                });
            }
            if l.bias.len() != l.weight.rows() {
                return Err(Error::DimensionMismatch {
                    expected: l.weight.rows(),
                    actual: l.bias.len(),
                });
            }
            fan_in = l.weight.rows();
        }
        Ok(Self { layers, init_std })
    }

    pub fn layers(&self) -> &[DenseLayer<T>] {
        &self.layers
    }

    pub fn init_std(&self) -> f64 {
        self.init_std
    }

    pub fn dim_in(&self) -> usize {
        self.layers[0].weight.cols()
    }

    pub fn dim_out(&self) -> usize {
        self.layers.last().map_or(0, |l| l.weight.rows())
    }

    /// Copy with every weight multiplied by `s` (biases untouched).
    pub fn scale_weights(&self, s: T) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| DenseLayer {
                    weight: l.weight.map(|w| w * s),
                    bias: l.bias.clone(),
                })
                .collect(),
            init_std: self.init_std * s.as_f64(),
        }
    }

    pub(crate) fn encode_into(&self, x: &[T], out: &mut [T]) {
        let mut h = x.to_vec();
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let next: Vec<T> = layer
                .weight
                .iter_rows()
                .zip(&layer.bias)
                .map(|(w, &b)| (dot(w, &h) + b).max(T::zero()))
                .collect();
            if li == last {
                out.copy_from_slice(&next);
                return;
            }
            h = next;
        }
    }
}
