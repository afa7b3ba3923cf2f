//! Analysis artifacts: encoding-distance curves, frequency-law checks,
//! one-dimensional encoding illustrations, and classification sweeps over
//! scale and corruption.
//!
//! All functions are deterministic given their seeds. Tables serialize to
//! CSV through [`output`].

pub mod output;
mod sweeps;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoders::{encode_impulse, sinc_field, Encoder, EncoderKind, EncoderSpec};
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::scalar::Real;

pub use output::{csv_body, render_csv, strip_comments, write_csv, LinePlot, Series};
pub use sweeps::{
    pooling_robustness_grid, pooling_robustness_sweep, scale_sweep, RobustnessRow, ScaleRow,
    TrainedHead,
};

/// Encoder redraws per curve when not overridden.
pub const DEFAULT_DRAWS: usize = 50;
/// Point pairs sampled per encoder draw and distance.
pub const DEFAULT_PAIRS_PER_DRAW: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceRow {
    /// Point distance (input units).
    pub d: f64,
    /// Mean of `‖h(x) − h(y)‖²`.
    pub mean_sq: f64,
    /// Standard deviation of `‖h(x) − h(y)‖²` across all samples.
    pub std_sq: f64,
    /// Mean of `‖h(x) − h(y)‖`.
    pub mean_dist: f64,
    pub samples: usize,
}

fn squared_gap<T: Real>(a: &[T], b: &[T]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&p, &q)| {
            let d = (p - q).as_f64();
            d * d
        })
        .sum()
}

/// `x` and `y = x + d·u` for a random unit `u`. `x` is uniform in `[−1,1]^D`,
/// except for the impulse encoder whose domain is `(0,1)`: there `y` is
/// placed on whichever side keeps it inside, and `None` is returned when
/// `d ≥ 1` leaves no room.
fn sample_pair(kind: EncoderKind, dim: usize, d: f64, rng: &mut SeededRng) -> Option<(Vec<f64>, Vec<f64>)> {
    if kind == EncoderKind::Impulse {
        let margin = 1e-9;
        if d >= 1.0 - 2.0 * margin {
            return None;
        }
        let x = rng.uniform_in(margin, 1.0 - margin - d);
        // mirror so both directions are equally likely
        return Some(if rng.bernoulli(0.5) {
            (vec![x], vec![x + d])
        } else {
            (vec![x + d], vec![x])
        });
    }
    let x: Vec<f64> = (0..dim).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
    let u = rng.unit_vector_n(dim);
    let y = x.iter().zip(&u).map(|(a, b)| a + d * b).collect();
    Some((x, y))
}

/// Encoding distance against point distance, averaged over random points,
/// random directions and `draws` encoder redraws. Redraw `r` rebuilds
/// `spec` with a seed taken from `rng.fork(r)`, so the spec's own seed is
/// ignored.
pub fn distance_curve<T: Real>(
    spec: &EncoderSpec,
    distances: &[f64],
    draws: usize,
    pairs_per_draw: usize,
    rng: &SeededRng,
) -> Result<Vec<DistanceRow>> {
    if draws == 0 || pairs_per_draw == 0 {
        return Err(Error::InvalidArgument("draws and pairs_per_draw must be at least 1".into()));
    }
    if let Some(d) = distances.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
        return Err(Error::InvalidArgument(format!("distance {d} must be finite and non-negative")));
    }
    let per_draw = (0..draws)
        .into_par_iter()
        .map(|r| {
            let mut draw_rng = rng.fork(r as u64);
            let seeded = EncoderSpec {
                seed: draw_rng.next_u64(),
                ..spec.clone()
            };
            let enc: Encoder<T> = seeded.build()?;
            distances
                .iter()
                .enumerate()
                .map(|(i, &d)| {
                    let mut pair_rng = draw_rng.fork(i as u64);
                    let mut gaps = Vec::with_capacity(pairs_per_draw);
                    for _ in 0..pairs_per_draw {
                        let Some((x, y)) = sample_pair(spec.kind, spec.dim_in, d, &mut pair_rng) else {
                            break;
                        };
                        let x: Vec<T> = x.into_iter().map(T::lit).collect();
                        let y: Vec<T> = y.into_iter().map(T::lit).collect();
                        gaps.push(squared_gap(&enc.encode(&x)?, &enc.encode(&y)?));
                    }
                    Ok(gaps)
                })
                .collect::<Result<Vec<Vec<f64>>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(distances
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let all: Vec<f64> = per_draw.iter().flat_map(|g| g[i].iter().copied()).collect();
            let n = all.len() as f64;
            if all.is_empty() {
                return DistanceRow {
                    d,
                    mean_sq: f64::NAN,
                    std_sq: f64::NAN,
                    mean_dist: f64::NAN,
                    samples: 0,
                };
            }
            let mean = all.iter().sum::<f64>() / n;
            let var = all.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / n;
            DistanceRow {
                d,
                mean_sq: mean,
                std_sq: var.sqrt(),
                mean_dist: all.iter().map(|g| g.sqrt()).sum::<f64>() / n,
                samples: all.len(),
            }
        })
        .collect())
}

/// Expected squared RFF encoding distance `2F(1 − exp(−σ²d²/2))`.
pub fn rff_kernel_distance(frequencies: usize, scale: f64, d: f64) -> f64 {
    2.0 * frequencies as f64 * (1.0 - (-0.5 * scale * scale * d * d).exp())
}

/// Moments and shape of `s = Σ_{k<D} U_k`, `U_k ~ U[−B, B]`, against the
/// normal `N(0, DB²/3)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyLawReport {
    pub dim: usize,
    pub bandwidth: f64,
    pub samples: usize,
    pub variance: f64,
    /// `D·B²/3`.
    pub target_variance: f64,
    pub relative_error: f64,
    /// Sup-distance between the empirical CDF and the normal CDF.
    pub ks_distance: f64,
    /// Max absolute gap between the standardized histogram density on
    /// `[−4, 4]` and the standard normal density.
    pub max_density_deviation: f64,
    /// Density near 0 over the mean density near `±B`.
    pub center_to_b_ratio: f64,
    /// Standard error of the variance estimate.
    pub variance_std_error: f64,
    /// Variance of the signed integer frequency sums of the tensor-product
    /// grid, when the grid is small enough to enumerate.
    pub grid_variance: Option<f64>,
}

const HISTOGRAM_BINS: usize = 32;
const HISTOGRAM_RANGE: f64 = 4.0;

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn draw_sums(dim: usize, bandwidth: f64, samples: usize, rng: &mut SeededRng) -> Vec<f64> {
    (0..samples)
        .map(|_| (0..dim).map(|_| rng.uniform_in(-bandwidth, bandwidth)).sum())
        .collect()
}

/// Variance about the known zero mean and the standard error
/// `sqrt((m4 − m2²)/n)` of that estimate.
fn variance_and_error(s: &[f64]) -> (f64, f64) {
    let n = s.len() as f64;
    let m2 = s.iter().map(|x| x * x).sum::<f64>() / n;
    let m4 = s.iter().map(|x| x.powi(4)).sum::<f64>() / n;
    (m2, ((m4 - m2 * m2).max(0.0) / n).sqrt())
}

/// Variance of `Σ_d f_d` over the signed frequency vectors of the
/// `(2B)^D` tensor-product grid.
pub fn grid_frequency_variance(dim: usize, bandwidth: usize) -> Result<f64> {
    let grid = crate::encoders::expand_frequency_grid(dim, bandwidth)?;
    let sums: Vec<f64> = grid.iter().map(|f| f.iter().sum::<i64>() as f64).collect();
    let n = sums.len() as f64;
    let mean = sums.iter().sum::<f64>() / n;
    Ok(sums.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n)
}

pub fn frequency_law_check(
    dim: usize,
    bandwidth: f64,
    samples: usize,
    rng: &mut SeededRng,
) -> Result<FrequencyLawReport> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::InvalidArgument(format!("bandwidth {bandwidth} must be positive")));
    }
    if samples < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    let mut s = draw_sums(dim, bandwidth, samples, rng);
    let target = dim as f64 * bandwidth * bandwidth / 3.0;
    let (variance, variance_std_error) = variance_and_error(&s);
    let sd = target.sqrt();
    let n = samples as f64;

    s.sort_by(f64::total_cmp);
    let ks_distance = s
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf(x / sd);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);

    let width = 2.0 * HISTOGRAM_RANGE / HISTOGRAM_BINS as f64;
    let mut counts = [0usize; HISTOGRAM_BINS];
    for &x in &s {
        let z = x / sd;
        if z.abs() < HISTOGRAM_RANGE {
            let b = ((z + HISTOGRAM_RANGE) / width) as usize;
            counts[b.min(HISTOGRAM_BINS - 1)] += 1;
        }
    }
    let max_density_deviation = counts
        .iter()
        .enumerate()
        .map(|(b, &c)| {
            let mid = -HISTOGRAM_RANGE + (b as f64 + 0.5) * width;
            (c as f64 / (n * width) - normal_pdf(mid)).abs()
        })
        .fold(0.0, f64::max);

    let h = bandwidth / 16.0;
    let density_at = |c: f64| s.iter().filter(|&&x| (x - c).abs() < 0.5 * h).count() as f64 / (n * h);
    let edge = 0.5 * (density_at(bandwidth) + density_at(-bandwidth));
    let center_to_b_ratio = density_at(0.0) / edge;

    let grid_variance = (bandwidth.fract() == 0.0 && (1..=3).contains(&dim))
        .then(|| grid_frequency_variance(dim, bandwidth as usize).ok())
        .flatten();

    Ok(FrequencyLawReport {
        dim,
        bandwidth,
        samples,
        variance,
        target_variance: target,
        relative_error: (variance - target).abs() / target,
        ks_distance,
        max_density_deviation,
        center_to_b_ratio,
        variance_std_error,
        grid_variance,
    })
}

/// Standard error of the variance estimate at `samples`, averaged over
/// `reps` independent repetitions.
pub fn variance_standard_error(
    dim: usize,
    bandwidth: f64,
    samples: usize,
    reps: usize,
    rng: &SeededRng,
) -> f64 {
    (0..reps)
        .map(|r| variance_and_error(&draw_sums(dim, bandwidth, samples, &mut rng.fork(r as u64))).1)
        .sum::<f64>()
        / reps.max(1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IllustrationConfig {
    pub impulse_bins: usize,
    pub sinc_bandwidth: usize,
    /// Samples of `t` on `[0, 1)`.
    pub grid: usize,
}

impl Default for IllustrationConfig {
    fn default() -> Self {
        Self {
            impulse_bins: 16,
            sinc_bandwidth: 16,
            grid: 512,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub encoder: String,
    /// Shift applied to every point; 0 for the clean curve.
    pub epsilon: f64,
    pub t: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveGap {
    pub encoder: String,
    pub epsilon: f64,
    /// L2 distance to the clean embedding.
    pub l2_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Illustration {
    pub curves: Vec<CurveSample>,
    pub gaps: Vec<CurveGap>,
}

/// Impulse (histogram) and sinc embeddings of a 1D cloud, clean and with
/// every point shifted by each `ε` in `noise`.
///
/// The impulse gap is the Euclidean distance between histogram vectors.
/// The sinc gap is the RMS difference of the sinc fields over the `t` grid.
pub fn encoding_illustration(
    points: &[f64],
    noise: &[f64],
    cfg: &IllustrationConfig,
) -> Result<Illustration> {
    if points.is_empty() {
        return Err(Error::Empty("illustration needs at least one point".into()));
    }
    if cfg.grid == 0 {
        return Err(Error::InvalidArgument("grid must be at least 1".into()));
    }
    let ts: Vec<f64> = (0..cfg.grid).map(|i| i as f64 / cfg.grid as f64).collect();
    let mut out = Illustration::default();
    let clean_hist = encode_impulse(points, cfg.impulse_bins)?;
    let clean_sinc: Vec<f64> = ts.iter().map(|&t| sinc_field(points, cfg.sinc_bandwidth, t)).collect();

    let mut emit = |eps: f64, pts: &[f64]| -> Result<()> {
        let hist = encode_impulse(pts, cfg.impulse_bins)?;
        let field: Vec<f64> = ts.iter().map(|&t| sinc_field(pts, cfg.sinc_bandwidth, t)).collect();
        for (i, &t) in ts.iter().enumerate() {
            let bin = crate::encoders::impulse_bin(t, cfg.impulse_bins);
            out.curves.push(CurveSample {
                encoder: "impulse".into(),
                epsilon: eps,
                t,
                value: hist[bin],
            });
            out.curves.push(CurveSample {
                encoder: "sinc".into(),
                epsilon: eps,
                t,
                value: field[i],
            });
        }
        if eps != 0.0 {
            out.gaps.push(CurveGap {
                encoder: "impulse".into(),
                epsilon: eps,
                l2_gap: squared_gap(&hist, &clean_hist).sqrt(),
            });
            out.gaps.push(CurveGap {
                encoder: "sinc".into(),
                epsilon: eps,
                l2_gap: (squared_gap(&field, &clean_sinc) / ts.len() as f64).sqrt(),
            });
        }
        Ok(())
    };
    emit(0.0, points)?;
    for &eps in noise {
        let shifted: Vec<f64> = points.iter().map(|x| x + eps).collect();
        emit(eps, &shifted)?;
    }
    Ok(out)
}
