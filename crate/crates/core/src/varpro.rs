//! Variable projection of the per-channel source weights.
//!
//! For a coefficient vector `x` let `u_i = B_i x`. The joint misfit
//! `g(x, alpha) = sum_i |d_i - alpha_i u_i|^2` is minimized over `alpha`
//! channel by channel, giving `alpha_i(x) = <d_i, u_i> / |u_i|^2` (inner
//! product conjugate-linear in the second slot). The reduced objective
//! `g(x, alpha(x))` has gradient equal to the partial gradient of `g` in `x`
//! at the projected weights, `-2 Re sum_i B_i^H (conj(alpha_i) r_i)`.
//!
//! The reduced objective is invariant under `x -> c x` for any real `c != 0`,
//! which leaves an l1-ball constraint on `x` with nothing to act on. The
//! [`WeightGauge::NormBound`] gauge removes that freedom by minimizing over
//! `|alpha|_2 <= A`; the minimizer is still closed form up to one scalar
//! secular equation, and the gradient identity holds unchanged because the
//! constraint on `alpha` does not involve `x`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::exec::Execution;
use crate::linops::{inner, to_complex, OperatorRef};

#[derive(Debug, Clone)]
pub struct ChannelOperator {
    pub index: usize,
    pub op: OperatorRef,
}

#[derive(Debug, Clone)]
pub struct Instance {
    channels: Vec<ChannelOperator>,
    data: Vec<Vec<Complex64>>,
    sigma: f64,
    exec: Execution,
}

impl Instance {
    pub fn new(channels: Vec<ChannelOperator>, data: Vec<Vec<Complex64>>, sigma: f64) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::InvalidInstance("at least one channel is required".into()));
        }
        if channels.len() != data.len() {
            return Err(Error::InvalidInstance(format!(
                "{} channels but {} data vectors",
                channels.len(),
                data.len()
            )));
        }
        let n = channels[0].op.domain_dim();
        for (ch, d) in channels.iter().zip(&data) {
            if ch.op.domain_dim() != n {
                return Err(Error::InvalidInstance(format!(
                    "channel {} has domain dimension {}, expected {n}",
                    ch.index,
                    ch.op.domain_dim()
                )));
            }
            if ch.op.range_dim() != d.len() {
                return Err(Error::InvalidInstance(format!(
                    "channel {} data has length {}, operator range is {}",
                    ch.index,
                    d.len(),
                    ch.op.range_dim()
                )));
            }
            if d.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidInstance(format!("sigma must be finite and nonnegative, got {sigma}")));
        }
        Ok(Self {
            channels,
            data,
            sigma,
            exec: Execution::default(),
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidInstance(format!("sigma must be finite and nonnegative, got {sigma}")));
        }
        self.sigma = sigma;
        Ok(self)
    }

    pub fn execution(&self) -> Execution {
        self.exec
    }

    pub fn channels(&self) -> &[ChannelOperator] {
        &self.channels
    }

    pub fn data(&self) -> &[Vec<Complex64>] {
        &self.data
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn domain_dim(&self) -> usize {
        self.channels[0].op.domain_dim()
    }

    /// `sum_i |d_i|^2`, the objective at `x = 0`.
    pub fn data_norm_sq(&self) -> f64 {
        self.data.iter().flatten().map(|z| z.norm_sqr()).sum()
    }

    /// `B_i x` for every channel.
    pub fn predictions(&self, x: &[f64]) -> Result<Vec<Vec<Complex64>>> {
        check_len("coefficient vector", self.domain_dim(), x.len())?;
        let xc = to_complex(x);
        Ok(self.exec.map(&self.channels, |ch| {
            let mut out = vec![Complex64::default(); ch.op.range_dim()];
            ch.op.forward_into(&xc, &mut out);
            out
        }))
    }

    /// `Re sum_i B_i^H (conj(alpha_i) v_i)`, reduced in channel order.
    pub fn weighted_adjoint(&self, alpha: &SourceWeights, vs: &[Vec<Complex64>]) -> Vec<f64> {
        let idx: Vec<usize> = (0..self.channels.len()).collect();
        let parts = self.exec.map(&idx, |&i| {
            let a = alpha.0[i].conj();
            let scaled: Vec<Complex64> = vs[i].iter().map(|v| a * v).collect();
            let mut out = vec![Complex64::default(); self.domain_dim()];
            self.channels[i].op.adjoint_into(&scaled, &mut out);
            out
        });
        let mut acc = vec![0.0; self.domain_dim()];
        for part in parts {
            for (a, p) in acc.iter_mut().zip(part) {
                *a += p.re;
            }
        }
        acc
    }

    /// Per-channel back-projections `B_i^H d_i`.
    pub fn data_backprojections(&self) -> Vec<Vec<Complex64>> {
        let idx: Vec<usize> = (0..self.channels.len()).collect();
        self.exec.map(&idx, |&i| {
            let mut out = vec![Complex64::default(); self.domain_dim()];
            self.channels[i].op.adjoint_into(&self.data[i], &mut out);
            out
        })
    }
}

/// One complex weight per channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceWeights(pub Vec<Complex64>);

impl SourceWeights {
    pub fn new(alpha: Vec<Complex64>) -> Result<Self> {
        if alpha.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(alpha))
    }

    pub fn ones(m: usize) -> Self {
        Self(vec![Complex64::new(1.0, 0.0); m])
    }

    pub fn zeros(m: usize) -> Self {
        Self(vec![Complex64::default(); m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// How the weights are projected for a given `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "bound")]
pub enum WeightGauge {
    /// Unconstrained per-channel least squares.
    Free,
    /// Least squares subject to `|alpha|_2 <= bound`.
    NormBound(f64),
}

impl WeightGauge {
    /// Bound equal to the norm of all-ones weights.
    pub fn unit(channels: usize) -> Self {
        WeightGauge::NormBound((channels as f64).sqrt())
    }

    pub fn validate(self) -> Result<()> {
        match self {
            WeightGauge::Free => Ok(()),
            WeightGauge::NormBound(b) if b > 0.0 && b.is_finite() => Ok(()),
            WeightGauge::NormBound(b) => Err(Error::InvalidConfig(format!(
                "weight norm bound must be positive and finite, got {b}"
            ))),
        }
    }
}

/// Result of evaluating the misfit at one point.
#[derive(Debug, Clone)]
pub struct ObjectiveEval {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub weights: SourceWeights,
    pub residuals: Vec<Vec<Complex64>>,
}

impl ObjectiveEval {
    /// `|Re sum_i conj(alpha_i) B_i^H r_i|_inf`, i.e. half the gradient's sup norm.
    pub fn dual_norm(&self) -> f64 {
        0.5 * self.gradient.iter().fold(0.0f64, |m, g| m.max(g.abs()))
    }
}

/// Minimizer over `alpha` of `sum_i (a_i |alpha_i|^2 - 2 Re(conj(alpha_i) p_i))`
/// where `p_i = <d_i, u_i>` and `a_i = |u_i|^2`.
pub fn project_weights(p: &[Complex64], a: &[f64], gauge: WeightGauge) -> SourceWeights {
    let free: Vec<Complex64> = p
        .iter()
        .zip(a)
        .map(|(&pi, &ai)| if ai > 0.0 { pi / ai } else { Complex64::default() })
        .collect();
    let bound = match gauge {
        WeightGauge::Free => return SourceWeights(free),
        WeightGauge::NormBound(b) => b,
    };
    let free_norm = free.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if free_norm <= bound {
        return SourceWeights(free);
    }
    let lambda = secular_root(p, a, bound);
    SourceWeights(
        p.iter()
            .zip(a)
            .map(|(&pi, &ai)| if ai > 0.0 { pi / (ai + lambda) } else { Complex64::default() })
            .collect(),
    )
}

/// Root `lambda > 0` of `sum_i |p_i|^2 / (a_i + lambda)^2 = bound^2`, by
/// Newton on `1/sqrt(phi) - 1/bound` inside a bisection bracket.
fn secular_root(p: &[Complex64], a: &[f64], bound: f64) -> f64 {
    let terms: Vec<(f64, f64)> = p
        .iter()
        .zip(a)
        .filter(|(_, &ai)| ai > 0.0)
        .map(|(pi, &ai)| (pi.norm_sqr(), ai))
        .collect();
    let phi = |l: f64| -> (f64, f64) {
        terms.iter().fold((0.0, 0.0), |(f, df), &(q, ai)| {
            let s = ai + l;
            (f + q / (s * s), df - 2.0 * q / (s * s * s))
        })
    };
    let p_norm = terms.iter().map(|(q, _)| q).sum::<f64>().sqrt();
    let (mut lo, mut hi) = (0.0f64, p_norm / bound);
    let mut l = 0.0;
    for _ in 0..200 {
        let (f, df) = phi(l);
        let h = 1.0 / f.sqrt() - 1.0 / bound;
        if h.abs() <= 1e-15 / bound {
            return l;
        }
        if h < 0.0 {
            lo = l;
        } else {
            hi = l;
        }
        let dh = -0.5 * df / (f * f.sqrt());
        let newton = l - h / dh;
        l = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    l
}

fn weight_moments(inst: &Instance, u: &[Vec<Complex64>]) -> (Vec<Complex64>, Vec<f64>) {
    u.iter()
        .zip(inst.data())
        .map(|(ui, di)| (inner(di, ui), ui.iter().map(|z| z.norm_sqr()).sum::<f64>()))
        .unzip()
}

/// Weights minimizing the misfit for fixed `x`. A channel whose prediction is
/// identically zero gets weight zero.
pub fn solve_weights(inst: &Instance, x: &[f64], gauge: WeightGauge) -> Result<SourceWeights> {
    gauge.validate()?;
    let u = inst.predictions(x)?;
    let (p, a) = weight_moments(inst, &u);
    Ok(project_weights(&p, &a, gauge))
}

fn evaluate_with(inst: &Instance, u: Vec<Vec<Complex64>>, weights: SourceWeights) -> ObjectiveEval {
    let residuals: Vec<Vec<Complex64>> = u
        .into_iter()
        .zip(inst.data())
        .zip(&weights.0)
        .map(|((ui, di), &alpha)| di.iter().zip(ui).map(|(d, v)| d - alpha * v).collect())
        .collect();
    let value = residuals.iter().flatten().map(|z| z.norm_sqr()).sum();
    let gradient = inst
        .weighted_adjoint(&weights, &residuals)
        .into_iter()
        .map(|v| -2.0 * v)
        .collect();
    ObjectiveEval {
        value,
        gradient,
        weights,
        residuals,
    }
}

/// Reduced objective `g(x, alpha(x))` and its gradient.
pub fn eval_projected_objective(inst: &Instance, x: &[f64], gauge: WeightGauge) -> Result<ObjectiveEval> {
    gauge.validate()?;
    let u = inst.predictions(x)?;
    let (p, a) = weight_moments(inst, &u);
    let weights = project_weights(&p, &a, gauge);
    Ok(evaluate_with(inst, u, weights))
}

/// `g(x, alpha)` and its partial gradient in `x` for supplied weights.
pub fn eval_fixed_weight_objective(inst: &Instance, x: &[f64], alpha: &SourceWeights) -> Result<ObjectiveEval> {
    check_len("source weights", inst.num_channels(), alpha.len())?;
    let u = inst.predictions(x)?;
    Ok(evaluate_with(inst, u, alpha.clone()))
}

/// Rescales `(x, alpha)` to `(c x, alpha / c)` with `c > 0` chosen so that
/// `|alpha / c|_2 = target_norm`. Every product `alpha_i B_i x` is unchanged.
pub fn normalize_pair(x: &[f64], alpha: &SourceWeights, target_norm: f64) -> Result<(Vec<f64>, SourceWeights)> {
    if !(target_norm > 0.0 && target_norm.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "normalization target must be positive, got {target_norm}"
        )));
    }
    let norm = alpha.norm();
    if norm == 0.0 {
        return Err(Error::ZeroWeights);
    }
    let c = norm / target_norm;
    Ok((
        x.iter().map(|v| v * c).collect(),
        SourceWeights(alpha.0.iter().map(|a| a / c).collect()),
    ))
}

#[cfg(test)]
mod tests_support {
    use super::*;
    use crate::linops::{DenseMatrix, Field};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    pub(super) fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    pub(super) fn random_instance(seed: u64, n: usize, channels: usize, rows: usize) -> Instance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut chans = Vec::new();
        let mut data = Vec::new();
        for i in 0..channels {
            let mat: Vec<Vec<Complex64>> = (0..rows)
                .map(|_| (0..n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect())
                .collect();
            chans.push(ChannelOperator {
                index: i,
                op: Arc::new(DenseMatrix::from_rows(mat).unwrap().with_domain_field(Field::Real)),
            });
            data.push((0..rows).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect());
        }
        Instance::new(chans, data, 0.0).unwrap()
    }

    pub(super) fn random_x(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

}

#[cfg(test)]
mod tests {
    use super::tests_support::*;
    use super::*;
    use crate::linops::{DenseMatrix, Field};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    /// Instance whose single channel predicts `scale * d` at `x = e_0`.
    fn matched_instance(scale: Complex64) -> Instance {
        let d = vec![c(1.0, 2.0), c(-0.5, 0.25), c(0.0, 1.0)];
        let col: Vec<Vec<Complex64>> = d.iter().map(|v| vec![scale * v, c(0.3, 0.0)]).collect();
        let op = Arc::new(DenseMatrix::from_rows(col).unwrap().with_domain_field(Field::Real));
        Instance::new(vec![ChannelOperator { index: 0, op }], vec![d], 0.0).unwrap()
    }

    #[test]
    fn weights_for_matched_and_rotated_predictions() {
        let w = solve_weights(&matched_instance(c(1.0, 0.0)), &[1.0, 0.0], WeightGauge::Free).unwrap();
        assert!((w.0[0] - c(1.0, 0.0)).norm() < 1e-15);
        let w = solve_weights(&matched_instance(c(0.0, 1.0)), &[1.0, 0.0], WeightGauge::Free).unwrap();
        assert!((w.0[0] - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_x_gives_zero_weights_and_gradient() {
        let inst = random_instance(1, 6, 3, 4);
        for gauge in [WeightGauge::Free, WeightGauge::unit(3)] {
            let ev = eval_projected_objective(&inst, &[0.0; 6], gauge).unwrap();
            assert!(ev.weights.0.iter().all(|a| *a == Complex64::default()));
            assert_eq!(ev.value, inst.data_norm_sq());
            assert!(ev.gradient.iter().all(|g| *g == 0.0));
        }
        let ev = eval_fixed_weight_objective(&inst, &random_x(2, 6), &SourceWeights::zeros(3)).unwrap();
        assert_eq!(ev.value, inst.data_norm_sq());
        assert!(ev.gradient.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn weights_match_scalar_normal_equations() {
        let inst = random_instance(4, 5, 3, 6);
        let x = random_x(5, 5);
        let w = solve_weights(&inst, &x, WeightGauge::Free).unwrap();
        let u = inst.predictions(&x).unwrap();
        for (i, (ui, di)) in u.iter().zip(inst.data()).enumerate() {
            // one-unknown least squares: (u^H u) alpha = u^H d
            let uhu: f64 = ui.iter().map(|z| z.norm_sqr()).sum();
            let uhd: Complex64 = ui.iter().zip(di).map(|(a, b)| a.conj() * b).sum();
            assert!((w.0[i] - uhd / uhu).norm() <= 1e-12 * w.0[i].norm().max(1.0));
        }
    }

    #[test]
    fn bounded_weights_hit_the_bound() {
        let inst = random_instance(7, 5, 4, 6);
        let x: Vec<f64> = random_x(8, 5).iter().map(|v| v * 1e-3).collect();
        let free = solve_weights(&inst, &x, WeightGauge::Free).unwrap();
        assert!(free.norm() > 2.0);
        let bounded = solve_weights(&inst, &x, WeightGauge::NormBound(2.0)).unwrap();
        assert!((bounded.norm() - 2.0).abs() < 1e-12);
        // inactive bound reproduces the free solution
        let loose = solve_weights(&inst, &x, WeightGauge::NormBound(1e9)).unwrap();
        assert_eq!(loose, free);
        assert!(solve_weights(&inst, &x, WeightGauge::NormBound(0.0)).is_err());
    }

    #[test]
    fn gradient_identity_is_bitwise() {
        let inst = random_instance(9, 7, 3, 5);
        let x = random_x(10, 7);
        for gauge in [WeightGauge::Free, WeightGauge::NormBound(0.5)] {
            let proj = eval_projected_objective(&inst, &x, gauge).unwrap();
            let fixed = eval_fixed_weight_objective(&inst, &x, &proj.weights).unwrap();
            assert_eq!(proj.value, fixed.value);
            assert_eq!(proj.gradient, fixed.gradient);
            let sum: f64 = proj.residuals.iter().flatten().map(|z| z.norm_sqr()).sum();
            assert_eq!(proj.value, sum);
        }
    }

    fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
        (0..x.len())
            .map(|j| {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[j] += h;
                xm[j] -= h;
                (f(&xp) - f(&xm)) / (2.0 * h)
            })
            .collect()
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
        num / den.max(1e-300)
    }

    #[test]
    fn projected_gradient_matches_finite_differences() {
        for seed in 0..5 {
            let inst = random_instance(100 + seed, 12, 3, 6);
            let x = random_x(200 + seed, 12);
            let h = 1e-6 * x.iter().map(|v| v * v).sum::<f64>().sqrt();
            for gauge in [WeightGauge::Free, WeightGauge::NormBound(0.3)] {
                let ev = eval_projected_objective(&inst, &x, gauge).unwrap();
                let fd = central_difference(|z| eval_projected_objective(&inst, z, gauge).unwrap().value, &x, h);
                assert!(rel_err(&ev.gradient, &fd) <= 1e-6, "seed {seed} {gauge:?}");
            }
        }
    }

    #[test]
    fn fixed_gradient_matches_finite_differences() {
        let inst = random_instance(31, 10, 4, 5);
        let x = random_x(32, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let alpha = SourceWeights((0..4).map(|_| c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))).collect());
        let ev = eval_fixed_weight_objective(&inst, &x, &alpha).unwrap();
        let fd = central_difference(|z| eval_fixed_weight_objective(&inst, z, &alpha).unwrap().value, &x, 1e-6);
        assert!(rel_err(&ev.gradient, &fd) <= 1e-6);
    }

    #[test]
    fn projected_weights_are_optimal() {
        let inst = random_instance(41, 8, 3, 5);
        let x = random_x(42, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let best = eval_projected_objective(&inst, &x, WeightGauge::Free).unwrap();
        for _ in 0..50 {
            let delta: Vec<Complex64> = (0..3).map(|_| c(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1))).collect();
            let perturbed = SourceWeights(best.weights.0.iter().zip(&delta).map(|(a, d)| a + d).collect());
            let other = eval_fixed_weight_objective(&inst, &x, &perturbed).unwrap();
            assert!(best.value <= other.value);
        }
    }

    #[test]
    fn gauge_invariance_of_weights_and_values() {
        let inst = random_instance(51, 6, 3, 4);
        let x = random_x(52, 6);
        let w = solve_weights(&inst, &x, WeightGauge::Free).unwrap();
        let v = eval_fixed_weight_objective(&inst, &x, &w).unwrap().value;
        for scale in [0.1, 3.0, -2.0] {
            let xs: Vec<f64> = x.iter().map(|v| v / scale).collect();
            let ws = SourceWeights(w.0.iter().map(|a| a * scale).collect());
            let vs = eval_fixed_weight_objective(&inst, &xs, &ws).unwrap().value;
            assert!((v - vs).abs() <= 1e-12 * v.max(1.0));
            if scale > 0.0 {
                let solved = solve_weights(&inst, &xs, WeightGauge::Free).unwrap();
                for (a, b) in solved.0.iter().zip(&ws.0) {
                    assert!((a - b).norm() <= 1e-12 * b.norm().max(1.0));
                }
            }
        }
    }

    #[test]
    fn normalize_pair_behaviour() {
        let inst = random_instance(61, 6, 3, 4);
        let x = random_x(62, 6);
        let w = solve_weights(&inst, &x, WeightGauge::Free).unwrap();
        let (xn, wn) = normalize_pair(&x, &w, w.norm()).unwrap();
        assert!(xn.iter().zip(&x).all(|(a, b)| (a - b).abs() <= 1e-15 * b.abs().max(1.0)));
        assert!((wn.norm() - w.norm()).abs() < 1e-14);

        let (x1, w1) = normalize_pair(&x, &w, 1.0).unwrap();
        let x3: Vec<f64> = x.iter().map(|v| v / 3.0).collect();
        let w3 = SourceWeights(w.0.iter().map(|a| a * 3.0).collect());
        let (x2, w2) = normalize_pair(&x3, &w3, 1.0).unwrap();
        assert!(x1.iter().zip(&x2).all(|(a, b)| (a - b).abs() <= 1e-13));
        assert!(w1.0.iter().zip(&w2.0).all(|(a, b)| (a - b).norm() <= 1e-13));

        let before = eval_fixed_weight_objective(&inst, &x, &w).unwrap().value;
        let after = eval_fixed_weight_objective(&inst, &x1, &w1).unwrap().value;
        assert!((before - after).abs() <= 1e-12 * before.max(1.0));

        assert_eq!(normalize_pair(&x, &SourceWeights::zeros(3), 1.0).unwrap_err(), Error::ZeroWeights);
    }

    #[test]
    fn instance_validation() {
        let inst = random_instance(71, 4, 2, 3);
        let chans = inst.channels().to_vec();
        assert!(Instance::new(vec![], vec![], 0.0).is_err());
        assert!(Instance::new(chans.clone(), vec![vec![c(0.0, 0.0); 3]], 0.0).is_err());
        assert!(Instance::new(chans.clone(), vec![vec![c(0.0, 0.0); 2]; 2], 0.0).is_err());
        assert!(Instance::new(chans, inst.data().to_vec(), -1.0).is_err());
        assert!(eval_projected_objective(&inst, &[1.0; 3], WeightGauge::Free).is_err());
        assert!(eval_fixed_weight_objective(&inst, &[1.0; 4], &SourceWeights::ones(3)).is_err());
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let inst = random_instance(81, 9, 5, 4);
        let x = random_x(82, 9);
        let par = eval_projected_objective(&inst.clone().with_execution(Execution::Parallel), &x, WeightGauge::unit(5)).unwrap();
        let seq = eval_projected_objective(&inst.with_execution(Execution::Sequential), &x, WeightGauge::unit(5)).unwrap();
        assert_eq!(par.value, seq.value);
        assert_eq!(par.gradient, seq.gradient);
    }
}

#[cfg(test)]
mod props {
    use super::tests_support::*;
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn free_value_is_scale_invariant(seed in 0u64..1000, scale in prop_oneof![-20.0..-0.05f64, 0.05..20.0f64]) {
            let inst = random_instance(seed, 6, 3, 4);
            let x = random_x(seed + 1, 6);
            let xs: Vec<f64> = x.iter().map(|v| v * scale).collect();
            let a = eval_projected_objective(&inst, &x, WeightGauge::Free).unwrap().value;
            let b = eval_projected_objective(&inst, &xs, WeightGauge::Free).unwrap().value;
            prop_assert!((a - b).abs() <= 1e-10 * inst.data_norm_sq());
        }

        #[test]
        fn projected_weights_beat_feasible_alternatives(
            seed in 0u64..1000,
            bounded in any::<bool>(),
            alt in proptest::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 3),
        ) {
            let inst = random_instance(seed, 5, 3, 4);
            let x = random_x(seed + 7, 5);
            let gauge = if bounded { WeightGauge::unit(3) } else { WeightGauge::Free };
            let best = eval_projected_objective(&inst, &x, gauge).unwrap();
            let mut other = SourceWeights(alt.iter().map(|&(re, im)| Complex64::new(re, im)).collect());
            if let WeightGauge::NormBound(bound) = gauge {
                let n = other.norm();
                if n > bound {
                    other.0.iter_mut().for_each(|z| *z *= bound / n);
                }
            }
            let v = eval_fixed_weight_objective(&inst, &x, &other).unwrap().value;
            prop_assert!(best.value <= v + 1e-10 * inst.data_norm_sq());
            prop_assert!(best.value <= inst.data_norm_sq() * (1.0 + 1e-12));
            if let WeightGauge::NormBound(bound) = gauge {
                prop_assert!(best.weights.norm() <= bound * (1.0 + 1e-12));
            }
        }
    }
}
