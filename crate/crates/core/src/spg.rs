//! Spectral projected gradient for `min g(x) s.t. |x|_1 <= tau`.
//!
//! Each objective evaluation, line-search trial points included, re-solves the
//! weights, so the iteration runs on the reduced objective rather than
//! alternating between `x` and `alpha`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projections::{l1_norm, project_l1};
use crate::varpro::{
    eval_fixed_weight_objective, eval_projected_objective, Instance, ObjectiveEval, SourceWeights, WeightGauge,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpgConfig {
    pub max_iters: usize,
    /// Stop once `|P(x - grad) - x|_2` falls to this level.
    pub opt_tol: f64,
    pub step_min: f64,
    pub step_max: f64,
    /// Length of the nonmonotone reference window; 1 gives a monotone search.
    pub memory: usize,
    pub sufficient_decrease: f64,
    /// Weight gauge for the reduced objective; `None` bounds `|alpha|_2` by
    /// the square root of the channel count.
    pub gauge: Option<WeightGauge>,
}

impl Default for SpgConfig {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            opt_tol: 1e-9,
            step_min: 1e-10,
            step_max: 1e10,
            memory: 3,
            sufficient_decrease: 1e-4,
            gauge: None,
        }
    }
}

impl SpgConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.step_min > 0.0 && self.step_min <= self.step_max && self.step_max.is_finite()) {
            return bad("step clamps must satisfy 0 < step_min <= step_max < inf");
        }
        if self.memory == 0 {
            return bad("nonmonotone memory must be at least 1");
        }
        if !(self.sufficient_decrease > 0.0 && self.sufficient_decrease < 1.0) {
            return bad("sufficient_decrease must lie in (0, 1)");
        }
        if self.opt_tol.is_nan() || self.opt_tol < 0.0 {
            return bad("opt_tol must be nonnegative");
        }
        if let Some(g) = self.gauge {
            g.validate()?;
        }
        Ok(())
    }

    pub fn resolved_gauge(&self, channels: usize) -> WeightGauge {
        self.gauge.unwrap_or_else(|| WeightGauge::unit(channels))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpgStatus {
    Converged,
    IterationLimit,
    /// The line search could not find an acceptable step.
    Stalled,
}

/// State after each accepted iterate; entry 0 is the starting point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub value: f64,
    pub pg_norm: f64,
    /// Length of the step that produced this iterate.
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct SubproblemResult {
    pub tau: f64,
    pub x: Vec<f64>,
    pub weights: SourceWeights,
    pub value: f64,
    pub gradient: Vec<f64>,
    /// `|Re sum_i conj(alpha_i) B_i^H r_i|_inf` at the returned point.
    pub dual_quantity: f64,
    pub pg_norm: f64,
    pub iterations: usize,
    pub history: Vec<IterRecord>,
    pub status: SpgStatus,
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Objective<'a> {
    Projected(WeightGauge),
    Fixed(&'a SourceWeights),
}

impl Objective<'_> {
    pub(crate) fn eval(&self, inst: &Instance, x: &[f64]) -> Result<ObjectiveEval> {
        match self {
            Objective::Projected(gauge) => eval_projected_objective(inst, x, *gauge),
            Objective::Fixed(alpha) => eval_fixed_weight_objective(inst, x, alpha),
        }
    }
}

/// Ascent direction for `-g` at the origin together with the rate at which
/// the objective leaves `|d|^2` along the l1 ball.
#[derive(Debug, Clone)]
pub(crate) struct Bootstrap {
    pub direction: Vec<f64>,
    pub slope: f64,
}

pub(crate) fn bootstrap(inst: &Instance, objective: Objective<'_>) -> Bootstrap {
    let back = inst.data_backprojections();
    let n = inst.domain_dim();
    let combine = |alpha: &[Complex64]| -> Vec<f64> {
        let mut dir = vec![0.0; n];
        for (a, c) in alpha.iter().zip(&back) {
            for (d, v) in dir.iter_mut().zip(c) {
                *d += (a.conj() * v).re;
            }
        }
        dir
    };
    let alpha: Vec<Complex64> = match objective {
        Objective::Fixed(alpha) => alpha.0.clone(),
        Objective::Projected(WeightGauge::Free) => vec![Complex64::new(1.0, 0.0); back.len()],
        Objective::Projected(WeightGauge::NormBound(bound)) => {
            // best single coordinate with the best bounded weights for it
            let column_norm = |j: usize| back.iter().map(|c| c[j].norm_sqr()).sum::<f64>().sqrt();
            let (best, norm) = (0..n)
                .map(|j| (j, column_norm(j)))
                .fold((0, 0.0), |acc, (j, v)| if v > acc.1 { (j, v) } else { acc });
            if norm == 0.0 {
                return Bootstrap {
                    direction: vec![0.0; n],
                    slope: 0.0,
                };
            }
            let alpha: Vec<Complex64> = back.iter().map(|c| c[best] * (bound / norm)).collect();
            let direction = combine(&alpha);
            return Bootstrap {
                direction,
                slope: bound * norm,
            };
        }
    };
    let direction = combine(&alpha);
    let slope = sup_norm(&direction);
    Bootstrap { direction, slope }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn pg_residual(x: &[f64], g: &[f64], tau: f64) -> Result<f64> {
    let trial: Vec<f64> = x.iter().zip(g).map(|(a, b)| a - b).collect();
    let p = project_l1(&trial, tau)?;
    Ok(p.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
}

pub(crate) fn run_spg(
    inst: &Instance,
    objective: Objective<'_>,
    tau: f64,
    x0: Option<&[f64]>,
    cfg: &SpgConfig,
) -> Result<SubproblemResult> {
    cfg.validate()?;
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::NegativeRadius(tau));
    }
    let n = inst.domain_dim();
    let start = match x0 {
        Some(x0) => {
            crate::error::check_len("starting point", n, x0.len())?;
            x0.to_vec()
        }
        None => bootstrap(inst, objective).direction,
    };
    let mut x = project_l1(&start, tau)?;
    let mut ev = objective.eval(inst, &x)?;
    let mut step = 1.0 / sup_norm(&ev.gradient).max(f64::MIN_POSITIVE);
    let mut last_step = 0.0;
    let mut history = Vec::new();
    let mut values = Vec::new();
    let mut iterations = 0;
    let status = loop {
        let pg = pg_residual(&x, &ev.gradient, tau)?;
        history.push(IterRecord {
            value: ev.value,
            pg_norm: pg,
            step: last_step,
        });
        values.push(ev.value);
        if pg <= cfg.opt_tol {
            break SpgStatus::Converged;
        }
        if iterations >= cfg.max_iters {
            break SpgStatus::IterationLimit;
        }
        let trial: Vec<f64> = x.iter().zip(&ev.gradient).map(|(a, g)| a - step * g).collect();
        let dx: Vec<f64> = project_l1(&trial, tau)?.iter().zip(&x).map(|(p, a)| p - a).collect();
        let gtd = dot(&ev.gradient, &dx);
        let reference = values[values.len().saturating_sub(cfg.memory)..]
            .iter()
            .fold(f64::NEG_INFINITY, |m, v| m.max(*v));
        let mut lambda = 1.0;
        let accepted = loop {
            let xn: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + lambda * d).collect();
            let evn = objective.eval(inst, &xn)?;
            if evn.value <= reference + cfg.sufficient_decrease * lambda * gtd {
                break Some((xn, evn));
            }
            lambda *= 0.5;
            if lambda < 1e-10 {
                break None;
            }
        };
        let Some((xn, evn)) = accepted else {
            break SpgStatus::Stalled;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = evn.gradient.iter().zip(&ev.gradient).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        step = if sy <= 0.0 {
            cfg.step_max
        } else {
            (dot(&s, &s) / sy).clamp(cfg.step_min, cfg.step_max)
        };
        last_step = norm2_real(&s);
        x = xn;
        ev = evn;
        iterations += 1;
    };
    let pg_norm = history.last().map_or(0.0, |r| r.pg_norm);
    let dual_quantity = ev.dual_norm();
    Ok(SubproblemResult {
        tau,
        x,
        weights: ev.weights,
        value: ev.value,
        gradient: ev.gradient,
        dual_quantity,
        pg_norm,
        iterations,
        history,
        status,
    })
}

fn norm2_real(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Reduced problem: weights re-solved at every evaluation. `x0 = None`
/// starts from the back-projected data, which avoids the stationary point
/// at the origin.
pub fn solve_lasso(inst: &Instance, tau: f64, x0: Option<&[f64]>, cfg: &SpgConfig) -> Result<SubproblemResult> {
    let gauge = cfg.resolved_gauge(inst.num_channels());
    run_spg(inst, Objective::Projected(gauge), tau, x0, cfg)
}

/// Same iteration with the weights held at `alpha`.
pub fn solve_lasso_fixed(
    inst: &Instance,
    alpha: &SourceWeights,
    tau: f64,
    x0: Option<&[f64]>,
    cfg: &SpgConfig,
) -> Result<SubproblemResult> {
    crate::error::check_len("source weights", inst.num_channels(), alpha.len())?;
    run_spg(inst, Objective::Fixed(alpha), tau, x0, cfg)
}

/// `|P(x - grad g(x)) - x|_2` on the ball of radius `tau`.
pub fn projected_gradient_residual(inst: &Instance, x: &[f64], tau: f64, gauge: WeightGauge) -> Result<f64> {
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::NegativeRadius(tau));
    }
    let norm = l1_norm(x);
    if norm > tau * (1.0 + 1e-10) {
        return Err(Error::Infeasible { norm, tau });
    }
    let ev = eval_projected_objective(inst, x, gauge)?;
    pg_residual(x, &ev.gradient, tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{DenseMatrix, Field};
    use crate::varpro::ChannelOperator;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn random_instance(seed: u64, n: usize, channels: usize, rows: usize) -> Instance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = || Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let mut chans = Vec::new();
        let mut data = Vec::new();
        for i in 0..channels {
            let mat: Vec<Vec<Complex64>> = (0..rows).map(|_| (0..n).map(|_| c()).collect()).collect();
            chans.push(ChannelOperator {
                index: i,
                op: Arc::new(DenseMatrix::from_rows(mat).unwrap().with_domain_field(Field::Real)),
            });
            data.push((0..rows).map(|_| c()).collect());
        }
        Instance::new(chans, data, 0.0).unwrap()
    }

    #[test]
    fn zero_radius_is_trivial() {
        let inst = random_instance(1, 6, 3, 4);
        let res = solve_lasso(&inst, 0.0, None, &SpgConfig::default()).unwrap();
        assert!(res.x.iter().all(|v| *v == 0.0));
        assert!(res.weights.0.iter().all(|a| *a == Complex64::default()));
        assert_eq!(res.value, inst.data_norm_sq());
        assert_eq!(res.iterations, 0);
        assert_eq!(res.status, SpgStatus::Converged);
    }

    #[test]
    fn origin_is_stationary() {
        let inst = random_instance(2, 6, 3, 4);
        for gauge in [WeightGauge::Free, WeightGauge::unit(3)] {
            assert_eq!(projected_gradient_residual(&inst, &[0.0; 6], 1.0, gauge).unwrap(), 0.0);
        }
        assert!(matches!(
            projected_gradient_residual(&inst, &[1.0; 6], 1.0, WeightGauge::Free),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn iterates_feasible_and_residual_decreases() {
        let inst = random_instance(3, 10, 3, 4);
        let tau = 0.7;
        let cfg = SpgConfig {
            max_iters: 200,
            ..SpgConfig::default()
        };
        let res = solve_lasso(&inst, tau, None, &cfg).unwrap();
        assert!(l1_norm(&res.x) <= tau * (1.0 + 1e-10));
        assert!(res.history.last().unwrap().pg_norm <= res.history[0].pg_norm);
        let gauge = cfg.resolved_gauge(3);
        let check = eval_projected_objective(&inst, &res.x, gauge).unwrap();
        assert_eq!(check.value, res.value);
        let pg = projected_gradient_residual(&inst, &res.x, tau, gauge).unwrap();
        assert_eq!(pg, res.pg_norm);
    }

    #[test]
    fn monotone_with_unit_memory() {
        let inst = random_instance(4, 12, 4, 5);
        let cfg = SpgConfig {
            memory: 1,
            max_iters: 100,
            ..SpgConfig::default()
        };
        let res = solve_lasso(&inst, 1.5, None, &cfg).unwrap();
        for w in res.history.windows(2) {
            assert!(w[1].value <= w[0].value);
        }
    }

    #[test]
    fn deterministic_history() {
        let inst = random_instance(5, 12, 4, 5);
        let cfg = SpgConfig {
            max_iters: 50,
            ..SpgConfig::default()
        };
        let a = solve_lasso(&inst, 1.0, None, &cfg).unwrap();
        let b = solve_lasso(&inst, 1.0, None, &cfg).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.x, b.x);
    }

    #[test]
    fn fixed_weights_solve_is_convex_and_converges() {
        let inst = random_instance(6, 8, 3, 6);
        let alpha = SourceWeights::ones(3);
        let res = solve_lasso_fixed(&inst, &alpha, 0.5, None, &SpgConfig::default()).unwrap();
        assert_eq!(res.status, SpgStatus::Converged);
        assert_eq!(res.weights, alpha);
    }

    #[test]
    fn config_validation() {
        let inst = random_instance(7, 4, 2, 3);
        let bad = SpgConfig {
            memory: 0,
            ..SpgConfig::default()
        };
        assert!(solve_lasso(&inst, 1.0, None, &bad).is_err());
        assert!(solve_lasso(&inst, -1.0, None, &SpgConfig::default()).is_err());
        assert!(solve_lasso(&inst, 1.0, Some(&[0.0; 3]), &SpgConfig::default()).is_err());
    }

    #[test]
    fn bootstrap_slope_is_directional_derivative() {
        // objective along t * e_j leaves |d|^2 at rate 2 * slope for the best j
        let inst = random_instance(8, 6, 3, 4);
        let gauge = WeightGauge::unit(3);
        let b = bootstrap(&inst, Objective::Projected(gauge));
        let j = (0..6)
            .max_by(|&a, &c| b.direction[a].abs().total_cmp(&b.direction[c].abs()))
            .unwrap();
        let t = 1e-7;
        let mut x = vec![0.0; 6];
        x[j] = t * b.direction[j].signum();
        let v = eval_projected_objective(&inst, &x, gauge).unwrap().value;
        let rate = (inst.data_norm_sq() - v) / t;
        assert!((rate - 2.0 * b.slope).abs() <= 1e-5 * rate);
    }
}
