//! Per-point embeddings `h: R^D -> R^K`.
//!
//! Every encoder is fully materialized at build time from an
//! [`EncoderSpec`] `{kind, dim_in, dim_out, scale, seed}`; encoding is then a
//! pure function. Specs are what gets persisted: weights are regenerated
//! from the seed, never stored.
//!
//! | kind | `dim_in` | `dim_out` | `scale` |
//! |---|---|---|---|
//! | `impulse` | 1 | bins `G` | unused |
//! | `sinc1d` | 1 | bandwidth `K ≥ 2` | unused |
//! | `sinusoid_grid` | 1–3 | `(2B)^D` | multiplier on `2π` |
//! | `rff` | any | even, `2F` | std of `W` |
//! | `gaussian_pe` | any | `G^D` centers | kernel width σ |
//! | `relu_mlp` | any | last width | weight std |
//! | `rff_attention` | 3 | `4·w`, `w` even | std of the RFF front end |

mod attention;
mod band_limited;
mod gaussian_pe;
mod relu_mlp;
mod rff;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use attention::{canonical_order, AttentionLayer, AttentionParams, ATTENTION_LAYERS};
pub use band_limited::{
    encode_impulse, encode_sinc, expand_frequency_grid, frequency_grid_basis_count, impulse_bin,
    product_vs_rotated_basis, rotated_identity, sinc, sinc_field, ProductTerm, SincParams,
    SinusoidGridParams, FREQUENCY_GRID_CAP,
};
pub use gaussian_pe::GaussianPeParams;
pub use relu_mlp::{DenseLayer, ReluMlpParams, DEFAULT_HIDDEN_WIDTHS, DEFAULT_INIT_STD};
pub use rff::RffParams;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::pointcloud::PointCloud;
use crate::rng::SeededRng;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    Impulse,
    Sinc1d,
    SinusoidGrid,
    Rff,
    GaussianPe,
    ReluMlp,
    RffAttention,
}

impl EncoderKind {
    pub const ALL: [EncoderKind; 7] = [
        EncoderKind::Impulse,
        EncoderKind::Sinc1d,
        EncoderKind::SinusoidGrid,
        EncoderKind::Rff,
        EncoderKind::GaussianPe,
        EncoderKind::ReluMlp,
        EncoderKind::RffAttention,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EncoderKind::Impulse => "impulse",
            EncoderKind::Sinc1d => "sinc1d",
            EncoderKind::SinusoidGrid => "sinusoid_grid",
            EncoderKind::Rff => "rff",
            EncoderKind::GaussianPe => "gaussian_pe",
            EncoderKind::ReluMlp => "relu_mlp",
            EncoderKind::RffAttention => "rff_attention",
        }
    }
}

impl fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EncoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown encoder kind {s:?}")))
    }
}

/// Persisted description of an encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderSpec {
    pub kind: EncoderKind,
    pub dim_in: usize,
    pub dim_out: usize,
    pub scale: f64,
    pub seed: u64,
}

impl EncoderSpec {
    pub fn new(kind: EncoderKind, dim_in: usize, dim_out: usize, scale: f64, seed: u64) -> Self {
        Self {
            kind,
            dim_in,
            dim_out,
            scale,
            seed,
        }
    }

    pub fn build<T: Real>(&self) -> Result<Encoder<T>> {
        Encoder::build(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EncoderParams<T> {
    Impulse { grid: usize },
    Sinc1d(SincParams<T>),
    SinusoidGrid(SinusoidGridParams<T>),
    Rff(RffParams<T>),
    GaussianPe(GaussianPeParams<T>),
    ReluMlp(ReluMlpParams<T>),
    RffAttention {
        rff: RffParams<T>,
        attention: AttentionParams<T>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Encoder<T> {
    /// `None` for encoders assembled from explicit parameters.
    spec: Option<EncoderSpec>,
    dim_in: usize,
    dim_out: usize,
    params: EncoderParams<T>,
}

/// Builds an encoder; all randomness comes from `SeededRng::new(seed)`.
pub fn build_encoder<T: Real>(
    kind: EncoderKind,
    dim_in: usize,
    dim_out: usize,
    scale: f64,
    seed: u64,
) -> Result<Encoder<T>> {
    Encoder::build(&EncoderSpec::new(kind, dim_in, dim_out, scale, seed))
}

impl<T: Real> Encoder<T> {
    pub fn build(spec: &EncoderSpec) -> Result<Self> {
        let &EncoderSpec {
            kind,
            dim_in,
            dim_out,
            scale,
            seed,
        } = spec;
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidArgument(format!("scale must be positive, got {scale}")));
        }
        if dim_in == 0 || dim_out == 0 {
            return Err(Error::UnsupportedEncoder("dimensions must be at least 1".into()));
        }
        let unsupported = |msg: String| Err(Error::UnsupportedEncoder(msg));
        let mut rng = SeededRng::new(seed);
        let params = match kind {
            EncoderKind::Impulse | EncoderKind::Sinc1d if dim_in != 1 => {
                return unsupported(format!("{kind} requires dim_in = 1, got {dim_in}"));
            }
            EncoderKind::Impulse => EncoderParams::Impulse { grid: dim_out },
            EncoderKind::Sinc1d => EncoderParams::Sinc1d(SincParams::new(dim_out)?),
            EncoderKind::SinusoidGrid => {
                let per_axis = (dim_out as f64).powf(1.0 / dim_in as f64).round() as usize;
                if per_axis < 2
                    || !per_axis.is_multiple_of(2)
                    || per_axis.checked_pow(dim_in as u32) != Some(dim_out)
                {
                    return unsupported(format!(
                        "sinusoid_grid dim_out {dim_out} is not (2B)^{dim_in}"
                    ));
                }
                EncoderParams::SinusoidGrid(SinusoidGridParams::new(dim_in, per_axis / 2, scale)?)
            }
            EncoderKind::Rff => {
                if dim_out % 2 != 0 {
                    return unsupported(format!("rff needs an even output dimension, got {dim_out}"));
                }
                EncoderParams::Rff(RffParams::random(dim_out / 2, dim_in, scale, &mut rng))
            }
            EncoderKind::GaussianPe => {
                EncoderParams::GaussianPe(GaussianPeParams::lattice(dim_in, dim_out, scale)?)
            }
            EncoderKind::ReluMlp => {
                let mut widths = DEFAULT_HIDDEN_WIDTHS.to_vec();
                widths.push(dim_out);
                EncoderParams::ReluMlp(ReluMlpParams::random(dim_in, &widths, scale, &mut rng)?)
            }
            EncoderKind::RffAttention => {
                if dim_in != 3 {
                    return unsupported(format!("rff_attention requires dim_in = 3, got {dim_in}"));
                }
                if dim_out % (2 * ATTENTION_LAYERS) != 0 {
                    return unsupported(format!(
                        "rff_attention dim_out must be a multiple of {}, got {dim_out}",
                        2 * ATTENTION_LAYERS
                    ));
                }
                let width = dim_out / ATTENTION_LAYERS;
                let rff = RffParams::random(width / 2, dim_in, scale, &mut rng.fork(0));
                let attention = AttentionParams::random(width, &mut rng.fork(1));
                EncoderParams::RffAttention { rff, attention }
            }
        };
        Ok(Self {
            spec: Some(spec.clone()),
            dim_in,
            dim_out,
            params,
        })
    }

    /// RFF encoder with explicit frequencies (rows of `weights`).
    pub fn from_rff(params: RffParams<T>) -> Self {
        Self {
            spec: None,
            dim_in: params.weights().cols(),
            dim_out: params.dim_out(),
            params: EncoderParams::Rff(params),
        }
    }

    pub fn from_relu_mlp(params: ReluMlpParams<T>) -> Self {
        Self {
            spec: None,
            dim_in: params.dim_in(),
            dim_out: params.dim_out(),
            params: EncoderParams::ReluMlp(params),
        }
    }

    pub fn from_sinusoid_grid(params: SinusoidGridParams<T>) -> Self {
        Self {
            spec: None,
            dim_in: params.dim(),
            dim_out: params.dim_out(),
            params: EncoderParams::SinusoidGrid(params),
        }
    }

    pub fn spec(&self) -> Option<&EncoderSpec> {
        self.spec.as_ref()
    }

    pub fn kind(&self) -> EncoderKind {
        match &self.params {
            EncoderParams::Impulse { .. } => EncoderKind::Impulse,
            EncoderParams::Sinc1d(_) => EncoderKind::Sinc1d,
            EncoderParams::SinusoidGrid(_) => EncoderKind::SinusoidGrid,
            EncoderParams::Rff(_) => EncoderKind::Rff,
            EncoderParams::GaussianPe(_) => EncoderKind::GaussianPe,
            EncoderParams::ReluMlp(_) => EncoderKind::ReluMlp,
            EncoderParams::RffAttention { .. } => EncoderKind::RffAttention,
        }
    }

    pub fn params(&self) -> &EncoderParams<T> {
        &self.params
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    /// True when each output row depends only on its own point.
    pub fn is_pointwise(&self) -> bool {
        !matches!(self.params, EncoderParams::RffAttention { .. })
    }

    fn check_point(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dim_in {
            return Err(Error::DimensionMismatch {
                expected: self.dim_in,
                actual: x.len(),
            });
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("encoder input".into()));
        }
        if let EncoderParams::Impulse { .. } = self.params {
            if !(x[0] > T::zero() && x[0] < T::one()) {
                return Err(Error::InvalidArgument(format!(
                    "impulse input {} is outside (0, 1)",
                    x[0]
                )));
            }
        }
        Ok(())
    }

    /// Pointwise kernel; callers have validated `x` and sized `out`.
    pub(crate) fn encode_point_into(&self, x: &[T], out: &mut [T]) {
        match &self.params {
            EncoderParams::Impulse { grid } => {
                out.fill(T::zero());
                out[impulse_bin(x[0], *grid)] = T::one();
            }
            EncoderParams::Sinc1d(p) => p.encode_into(x[0], out),
            EncoderParams::SinusoidGrid(p) => p.encode_into(x, out),
            EncoderParams::Rff(p) => p.encode_into(x, out),
            EncoderParams::GaussianPe(p) => p.encode_into(x, out),
            EncoderParams::ReluMlp(p) => p.encode_into(x, out),
            EncoderParams::RffAttention { .. } => unreachable!("attention is not pointwise"),
        }
    }

    /// Embeds one point. For `rff_attention` this is the embedding of the
    /// single-point cloud `{x}`.
    pub fn encode(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_point(x)?;
        if let EncoderParams::RffAttention { .. } = self.params {
            let pc = PointCloud::new(vec![[x[0], x[1], x[2]]])?;
            return Ok(self.encode_cloud(&pc)?.into_vec());
        }
        let mut out = vec![T::zero(); self.dim_out];
        self.encode_point_into(x, &mut out);
        Ok(out)
    }

    /// N × K matrix whose row `i` embeds point `i`. Requires `dim_in = 3`.
    pub fn encode_cloud(&self, pc: &PointCloud<T>) -> Result<Matrix<T>> {
        if self.dim_in != 3 {
            return Err(Error::DimensionMismatch {
                expected: self.dim_in,
                actual: 3,
            });
        }
        for p in pc.points() {
            self.check_point(p)?;
        }
        match &self.params {
            EncoderParams::RffAttention { rff, attention } => {
                let mut embedded = Matrix::zeros(pc.len(), rff.dim_out());
                for (i, p) in pc.points().iter().enumerate() {
                    rff.encode_into(p, embedded.row_mut(i));
                }
                attention.forward(pc.points(), &embedded)
            }
            _ => {
                let mut out = Matrix::zeros(pc.len(), self.dim_out);
                out.as_mut_slice()
                    .par_chunks_mut(self.dim_out)
                    .zip(pc.points().par_iter())
                    .for_each(|(row, p)| self.encode_point_into(p, row));
                Ok(out)
            }
        }
    }

    /// Hex SHA-256 over the kind, shape and every parameter's bit pattern.
    pub fn checksum(&self) -> String {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(self.kind().name().as_bytes());
        bytes.extend_from_slice(&(self.dim_in as u64).to_le_bytes());
        bytes.extend_from_slice(&(self.dim_out as u64).to_le_bytes());
        let push_matrix = |m: &Matrix<T>, bytes: &mut Vec<u8>| {
            for &v in m.as_slice() {
                v.push_bits(bytes);
            }
        };
        match &self.params {
            EncoderParams::Impulse { grid } => bytes.extend_from_slice(&(*grid as u64).to_le_bytes()),
            EncoderParams::Sinc1d(p) => p.centers().iter().for_each(|&c| c.push_bits(&mut bytes)),
            EncoderParams::SinusoidGrid(p) => {
                for f in p.frequencies() {
                    for &i in f {
                        bytes.extend_from_slice(&i.to_le_bytes());
                    }
                }
            }
            EncoderParams::Rff(p) => push_matrix(p.weights(), &mut bytes),
            EncoderParams::GaussianPe(p) => {
                for c in p.centers() {
                    c.iter().for_each(|&v| v.push_bits(&mut bytes));
                }
            }
            EncoderParams::ReluMlp(p) => {
                for l in p.layers() {
                    push_matrix(&l.weight, &mut bytes);
                    l.bias.iter().for_each(|&b| b.push_bits(&mut bytes));
                }
            }
            EncoderParams::RffAttention { rff, attention } => {
                push_matrix(rff.weights(), &mut bytes);
                for l in attention.layers() {
                    push_matrix(&l.query, &mut bytes);
                    push_matrix(&l.key, &mut bytes);
                    push_matrix(&l.value, &mut bytes);
                }
            }
        }
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
