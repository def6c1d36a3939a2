//! Seeded synthetic instances with known ground truth, a brute-force oracle
//! for tiny subproblems, and recovery metrics.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance_io::{channel_operator, ChannelRecord, InstanceFile, INSTANCE_SCHEMA_VERSION};
use crate::linops::{densify, make_sparsifying_transform, to_complex, LinearOperator, TransformKind};
use crate::projections::{l1_norm, project_l1_oracle};
use crate::spg::{SpgStatus, SubproblemResult};
use crate::varpro::{normalize_pair, Instance, SourceWeights, WeightGauge};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightModel {
    Flat,
    RandomPhase,
    #[default]
    RickerSpectrum,
}

/// How each channel's frequency rows are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowLayout {
    /// Every channel draws its rows independently from the whole spectrum.
    #[default]
    Overlapping,
    /// Channel `i` draws from its own band of positive frequencies.
    Disjoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSpec {
    pub n: usize,
    pub k: usize,
    pub channels: usize,
    pub rows_per_channel: usize,
    pub weight_model: WeightModel,
    /// Noise norm relative to each channel's clean data norm.
    pub noise_level: f64,
    pub seed: u64,
    pub transform: TransformKind,
    pub layout: RowLayout,
    /// Peak frequency of the Ricker wavelet, as a fraction of the sampling rate.
    pub ricker_peak: f64,
    /// Wavelet delay in samples.
    pub ricker_delay: f64,
}

impl Default for ProblemSpec {
    fn default() -> Self {
        Self {
            n: 256,
            k: 8,
            channels: 6,
            rows_per_channel: 20,
            weight_model: WeightModel::RickerSpectrum,
            noise_level: 0.0,
            seed: 0,
            transform: TransformKind::Identity,
            layout: RowLayout::Overlapping,
            ricker_peak: 0.25,
            ricker_delay: 4.0,
        }
    }
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.n == 0 || self.channels == 0 || self.rows_per_channel == 0 {
            return bad("n, channels and rows_per_channel must be positive".into());
        }
        if self.k == 0 || self.k > self.n {
            return bad(format!("k must lie in 1..={}, got {}", self.n, self.k));
        }
        if !(self.noise_level >= 0.0 && self.noise_level.is_finite()) {
            return bad(format!("noise_level must be finite and nonnegative, got {}", self.noise_level));
        }
        if !(self.ricker_peak > 0.0 && self.ricker_peak.is_finite() && self.ricker_delay.is_finite()) {
            return bad("ricker_peak must be positive and ricker_delay finite".into());
        }
        match self.layout {
            RowLayout::Overlapping if self.rows_per_channel > self.n => {
                bad(format!("rows_per_channel {} exceeds n = {}", self.rows_per_channel, self.n))
            }
            RowLayout::Disjoint if self.rows_per_channel > self.band_width() => bad(format!(
                "disjoint bands hold {} rows per channel, {} requested",
                self.band_width(),
                self.rows_per_channel
            )),
            _ => Ok(()),
        }
    }

    fn band_width(&self) -> usize {
        (self.n / 2).saturating_sub(1) / self.channels
    }

    /// Normalized frequency associated with channel `i`.
    pub fn channel_frequency(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / (2.0 * self.channels as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub x_true: Vec<f64>,
    pub alpha_true: SourceWeights,
    /// The synthesized signal `C x_true`.
    pub y_true: Vec<f64>,
    /// `|eta|_2` over all channels.
    pub noise_norm: f64,
}

/// Spectrum of a Ricker wavelet at normalized frequency `nu`, peak-normalized
/// to unit amplitude and delayed by `delay` samples.
pub fn ricker_spectrum(nu: f64, peak: f64, delay: f64) -> Complex64 {
    let r = (nu / peak).powi(2);
    Complex64::from_polar(r * (1.0 - r).exp(), -2.0 * PI * nu * delay)
}

// named sub-streams of the problem seed
const STREAM_SPIKES: u64 = 1;
const STREAM_ROWS: u64 = 2;
const STREAM_WEIGHTS: u64 = 3;
const STREAM_NOISE: u64 = 4;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Generates an instance in its file form, ground truth included.
pub fn generate_file(spec: &ProblemSpec) -> Result<InstanceFile> {
    spec.validate()?;
    let n = spec.n;

    let mut rng = stream(spec.seed, STREAM_SPIKES);
    let mut x_true = vec![0.0; n];
    for pos in sample(&mut rng, n, spec.k).into_vec() {
        let mag = rng.random_range(0.5..=1.5);
        x_true[pos] = if rng.random::<bool>() { mag } else { -mag };
    }

    let mut rng = stream(spec.seed, STREAM_ROWS);
    let rows: Vec<Vec<usize>> = (0..spec.channels)
        .map(|i| {
            let mut r: Vec<usize> = match spec.layout {
                RowLayout::Overlapping => sample(&mut rng, n, spec.rows_per_channel).into_vec(),
                RowLayout::Disjoint => {
                    let w = spec.band_width();
                    sample(&mut rng, w, spec.rows_per_channel)
                        .into_iter()
                        .map(|j| 1 + i * w + j)
                        .collect()
                }
            };
            r.sort_unstable();
            r
        })
        .collect();

    let mut rng = stream(spec.seed, STREAM_WEIGHTS);
    let alpha: Vec<Complex64> = (0..spec.channels)
        .map(|i| match spec.weight_model {
            WeightModel::Flat => Complex64::new(1.0, 0.0),
            WeightModel::RandomPhase => Complex64::from_polar(1.0, rng.random_range(-PI..PI)),
            WeightModel::RickerSpectrum => {
                ricker_spectrum(spec.channel_frequency(i), spec.ricker_peak, spec.ricker_delay)
            }
        })
        .collect();

    let spectrum = vec![Complex64::new(1.0, 0.0); spec.rows_per_channel];
    let xc = to_complex(&x_true);
    let mut rng = stream(spec.seed, STREAM_NOISE);
    let mut records = Vec::with_capacity(spec.channels);
    let mut noise_sq = 0.0;
    for (r, a) in rows.into_iter().zip(&alpha) {
        let op = channel_operator(n, spec.transform, &r, &spectrum)?;
        let clean: Vec<Complex64> = op.apply_forward(&xc)?.into_iter().map(|v| a * v).collect();
        let dir: Vec<Complex64> = (0..clean.len())
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let clean_norm = clean.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let dir_norm = dir.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let scale = if dir_norm > 0.0 { spec.noise_level * clean_norm / dir_norm } else { 0.0 };
        let noise: Vec<Complex64> = dir.iter().map(|e| e * scale).collect();
        noise_sq += noise.iter().map(|e| e.norm_sqr()).sum::<f64>();
        records.push(ChannelRecord {
            rows: r,
            spectrum: spectrum.clone(),
            data: clean.iter().zip(&noise).map(|(c, e)| c + e).collect(),
        });
    }
    let noise_norm = noise_sq.sqrt();

    let y_true = synthesis_of(spec.transform, &x_true)?;
    Ok(InstanceFile {
        schema_version: INSTANCE_SCHEMA_VERSION,
        n,
        transform: spec.transform,
        sigma: noise_norm,
        channels: records,
        truth: Some(GroundTruth {
            x_true,
            alpha_true: SourceWeights(alpha),
            y_true,
            noise_norm,
        }),
    })
}

/// Generates an instance and its ground truth. `sigma` is set to the norm of
/// the noise actually added.
pub fn generate(spec: &ProblemSpec) -> Result<(Instance, GroundTruth)> {
    let mut file = generate_file(spec)?;
    let truth = file.truth.take().ok_or_else(|| Error::InvalidSpec("missing truth".into()))?;
    Ok((file.build()?, truth))
}

fn synthesis_of(kind: TransformKind, x: &[f64]) -> Result<Vec<f64>> {
    let t = make_sparsifying_transform(kind, x.len())?;
    Ok(t.apply_adjoint(&to_complex(x))?.into_iter().map(|z| z.re).collect())
}

/// Largest domain dimension [`joint_oracle`] accepts.
pub const ORACLE_LIMIT: usize = 16;

/// Real least-squares system `|b - A x|^2` with `A` stacked from the real and
/// imaginary parts of `alpha_i M_i`, plus its normal equations.
struct RealSystem {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    /// `2 A^T A`
    gram: Vec<Vec<f64>>,
    /// `2 A^T b`
    rhs: Vec<f64>,
}

impl RealSystem {
    fn new(mats: &[Vec<Vec<Complex64>>], data: &[Vec<Complex64>], alpha: &[Complex64], n: usize) -> Self {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for ((m, d), al) in mats.iter().zip(data).zip(alpha) {
            for (row, dv) in m.iter().zip(d) {
                let scaled: Vec<Complex64> = row.iter().map(|v| al * v).collect();
                a.push(scaled.iter().map(|z| z.re).collect::<Vec<f64>>());
                b.push(dv.re);
                a.push(scaled.iter().map(|z| z.im).collect());
                b.push(dv.im);
            }
        }
        let mut gram = vec![vec![0.0; n]; n];
        let mut rhs = vec![0.0; n];
        for (row, bv) in a.iter().zip(&b) {
            for i in 0..n {
                rhs[i] += 2.0 * row[i] * bv;
                for j in 0..n {
                    gram[i][j] += 2.0 * row[i] * row[j];
                }
            }
        }
        Self { a, b, gram, rhs }
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(row, b)| (b - row.iter().zip(x).map(|(r, v)| r * v).sum::<f64>()).powi(2))
            .sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.gram
            .iter()
            .zip(&self.rhs)
            .map(|(row, q)| row.iter().zip(x).map(|(g, v)| g * v).sum::<f64>() - q)
            .collect()
    }

    /// Largest eigenvalue of the Gram matrix by power iteration.
    fn lipschitz(&self) -> f64 {
        let n = self.rhs.len();
        let mut v = vec![1.0 / (n as f64).sqrt(); n];
        let mut lambda = 0.0;
        for _ in 0..1000 {
            let w: Vec<f64> = self.gram.iter().map(|row| row.iter().zip(&v).map(|(g, x)| g * x).sum()).collect();
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            let done = (norm - lambda).abs() <= 1e-15 * norm;
            lambda = norm;
            v = w.iter().map(|x| x / norm).collect();
            if done {
                break;
            }
        }
        lambda * 1.01
    }

    /// Projected gradient with step `1/L` from `x`, to a fixed-point tolerance
    /// or until the objective stops decreasing.
    fn minimize_on_ball(&self, x: &[f64], tau: f64) -> Result<Vec<f64>> {
        let lip = self.lipschitz();
        if lip == 0.0 {
            return Ok(x.to_vec());
        }
        let mut x = x.to_vec();
        let mut value = self.value(&x);
        for _ in 0..100_000 {
            let g = self.gradient(&x);
            let z: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - b / lip).collect();
            let xn = project_l1_oracle(&z, tau)?;
            let change = xn.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let next = self.value(&xn);
            x = xn;
            // a singular Gram matrix lets x drift along directions where the
            // objective is flat; stop once the value no longer moves
            let stalled = value - next <= 1e-16 * next;
            value = next;
            if change <= 1e-12 || stalled {
                break;
            }
        }
        Ok(x)
    }
}

/// Optimal weights by bisection on the norm-bound multiplier.
fn oracle_weights(mats: &[Vec<Vec<Complex64>>], data: &[Vec<Complex64>], x: &[f64], gauge: WeightGauge) -> Vec<Complex64> {
    let (p, a): (Vec<Complex64>, Vec<f64>) = mats
        .iter()
        .zip(data)
        .map(|(m, d)| {
            let u: Vec<Complex64> = m.iter().map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum()).collect();
            let p: Complex64 = u.iter().zip(d).map(|(ui, di)| ui.conj() * di).sum();
            (p, u.iter().map(|z| z.norm_sqr()).sum::<f64>())
        })
        .unzip();
    let at = |lambda: f64| -> Vec<Complex64> {
        p.iter()
            .zip(&a)
            .map(|(pi, ai)| if *ai > 0.0 { pi / (ai + lambda) } else { Complex64::default() })
            .collect()
    };
    let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let free = at(0.0);
    let bound = match gauge {
        WeightGauge::NormBound(b) if norm(&free) > b => b,
        _ => return free,
    };
    let (mut lo, mut hi) = (0.0, norm(&p) / bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if norm(&at(mid)) > bound {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(hi)
}

/// Multi-start alternating minimization over `(x, alpha)` on densified
/// operators: exact weights, then projected gradient in `x` to convergence,
/// repeated until the objective stops moving. Returns the best restart.
pub fn joint_oracle(inst: &Instance, tau: f64, restarts: usize, seed: u64, gauge: WeightGauge) -> Result<SubproblemResult> {
    let n = inst.domain_dim();
    if n > ORACLE_LIMIT {
        return Err(Error::TooLarge {
            dim: n,
            limit: ORACLE_LIMIT,
        });
    }
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::NegativeRadius(tau));
    }
    gauge.validate()?;
    let mats: Vec<Vec<Vec<Complex64>>> = inst
        .channels()
        .iter()
        .map(|c| densify(c.op.as_ref()))
        .collect::<Result<_>>()?;
    let data = inst.data();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<f64>, Vec<Complex64>, bool)> = None;
    for _ in 0..restarts.max(1) {
        let raw: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let scale = tau / l1_norm(&raw).max(f64::MIN_POSITIVE);
        let mut x: Vec<f64> = raw.iter().map(|v| v * scale).collect();
        let mut alpha = oracle_weights(&mats, data, &x, gauge);
        let mut value = RealSystem::new(&mats, data, &alpha, n).value(&x);
        let mut converged = false;
        for _ in 0..5000 {
            let system = RealSystem::new(&mats, data, &alpha, n);
            x = system.minimize_on_ball(&x, tau)?;
            alpha = oracle_weights(&mats, data, &x, gauge);
            let next = RealSystem::new(&mats, data, &alpha, n).value(&x);
            let drop = value - next;
            value = next;
            if drop <= 1e-15 * value.max(1e-300) {
                converged = true;
                break;
            }
        }
        if best.as_ref().is_none_or(|(v, ..)| value < *v) {
            best = Some((value, x, alpha, converged));
        }
    }
    let (value, x, alpha, converged) = best.unwrap_or_default();
    let system = RealSystem::new(&mats, data, &alpha, n);
    let gradient = system.gradient(&x);
    let dual_quantity = 0.5 * gradient.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    Ok(SubproblemResult {
        tau,
        x,
        weights: SourceWeights(alpha),
        value,
        gradient,
        dual_quantity,
        pg_norm: f64::NAN,
        iterations: 0,
        history: Vec::new(),
        status: if converged { SpgStatus::Converged } else { SpgStatus::IterationLimit },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryMetrics {
    /// `|x - x_true|_2 / |x_true|_2` after normalization and sign alignment.
    pub model_error: f64,
    pub amplitude_ratios: Vec<f64>,
    /// Phase differences wrapped to `(-pi, pi]`.
    pub phase_diffs: Vec<f64>,
    pub max_phase_error: f64,
    pub support_precision: f64,
    pub support_recall: f64,
}

/// Compares an estimate with the truth after rescaling the estimate's weights
/// to the norm of the true weights and fixing the remaining sign.
pub fn recovery_metrics(x: &[f64], alpha: &SourceWeights, truth: &GroundTruth) -> Result<RecoveryMetrics> {
    crate::error::check_len("estimate", truth.x_true.len(), x.len())?;
    crate::error::check_len("estimated weights", truth.alpha_true.len(), alpha.len())?;
    let truth_norm = truth.x_true.iter().map(|v| v * v).sum::<f64>().sqrt();
    if truth_norm == 0.0 || truth.alpha_true.norm() == 0.0 {
        return Err(Error::ZeroTruth);
    }
    let (mut xn, mut an) = normalize_pair(x, alpha, truth.alpha_true.norm())?;
    if xn.iter().zip(&truth.x_true).map(|(a, b)| a * b).sum::<f64>() < 0.0 {
        xn.iter_mut().for_each(|v| *v = -*v);
        an.0.iter_mut().for_each(|a| *a = -*a);
    }
    let model_error = xn
        .iter()
        .zip(&truth.x_true)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt()
        / truth_norm;
    let amplitude_ratios = an
        .0
        .iter()
        .zip(&truth.alpha_true.0)
        .map(|(a, t)| a.norm() / t.norm())
        .collect();
    let phase_diffs: Vec<f64> = an.0.iter().zip(&truth.alpha_true.0).map(|(a, t)| (a * t.conj()).arg()).collect();
    let max_phase_error = phase_diffs.iter().fold(0.0f64, |m, p| m.max(p.abs()));

    let peak = xn.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let est: Vec<bool> = xn.iter().map(|v| peak > 0.0 && v.abs() >= 0.01 * peak).collect();
    let truth_support: Vec<bool> = truth.x_true.iter().map(|v| *v != 0.0).collect();
    let hits = est.iter().zip(&truth_support).filter(|(e, t)| **e && **t).count() as f64;
    let n_est = est.iter().filter(|e| **e).count() as f64;
    let n_true = truth_support.iter().filter(|t| **t).count() as f64;
    Ok(RecoveryMetrics {
        model_error,
        amplitude_ratios,
        phase_diffs,
        max_phase_error,
        support_precision: if n_est > 0.0 { hits / n_est } else { 0.0 },
        support_recall: hits / n_true,
    })
}
