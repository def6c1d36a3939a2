//! Root finding on the value function `v(tau)`, the optimal misfit of the
//! l1-constrained subproblem, to meet a misfit target `sigma^2`.
//!
//! The slope used by Newton is the frozen-weight quantity
//! `v'(tau) = -|Re sum_i conj(alpha_i) B_i^H r_i|_inf`. Iterates stay inside a
//! bracket `[lo, hi]` with `v(lo) > sigma^2 >= v(hi)`; a step that leaves the
//! bracket, or fails to halve the residual once the bracket is finite, is
//! replaced by bisection, and with no upper end yet the radius is expanded.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::projections::{l1_norm, project_l1};
use crate::spg::{bootstrap, run_spg, IterRecord, Objective, SpgConfig, SpgStatus, SubproblemResult};
use crate::varpro::{Instance, SourceWeights, WeightGauge};

/// Which function of the misfit is driven to its target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueForm {
    /// Newton on `v(tau) - sigma^2` using `v'` as the slope.
    Squared,
    /// Newton on `sqrt(v(tau)) - sigma` using `v' / sqrt(v)` as the slope,
    /// which is the derivative of `sqrt(v)` when `-2 v'` is the derivative of
    /// `v`. Identical to `Squared` when `sigma = 0`.
    #[default]
    Unsquared,
}

impl ValueForm {
    /// Next radius from a Newton step; `None` when the slope vanishes.
    fn newton(self, tau: f64, value: f64, sigma: f64, dual: f64) -> Option<f64> {
        if dual <= 1e-30 {
            return None;
        }
        let next = match self {
            ValueForm::Squared => tau + (value - sigma * sigma) / dual,
            ValueForm::Unsquared => tau + (value.sqrt() - sigma) * value.sqrt() / dual,
        };
        next.is_finite().then_some(next)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParetoConfig {
    /// Misfit target; `None` uses the instance's own `sigma`.
    pub sigma: Option<f64>,
    /// Stop when `|v - sigma^2| <= root_tol * max(1, sigma^2)`.
    pub root_tol: f64,
    pub max_newton_steps: usize,
    /// Cap on inner iterations summed over all subproblems.
    pub total_iteration_budget: usize,
    pub subproblem: SpgConfig,
    pub bracket_expansion: f64,
    pub value_form: ValueForm,
}

impl Default for ParetoConfig {
    fn default() -> Self {
        Self {
            sigma: None,
            root_tol: 1e-6,
            max_newton_steps: 50,
            total_iteration_budget: 10_000,
            subproblem: SpgConfig::default(),
            bracket_expansion: 2.0,
            value_form: ValueForm::default(),
        }
    }
}

impl ParetoConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if let Some(s) = self.sigma {
            if !(s >= 0.0 && s.is_finite()) {
                return bad("sigma must be finite and nonnegative");
            }
        }
        if self.root_tol.is_nan() || self.root_tol <= 0.0 {
            return bad("root_tol must be positive");
        }
        if self.total_iteration_budget == 0 {
            return bad("total_iteration_budget must be at least 1");
        }
        if !(self.bracket_expansion > 1.0 && self.bracket_expansion.is_finite()) {
            return bad("bracket_expansion must exceed 1");
        }
        self.subproblem.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValuePoint {
    pub tau: f64,
    pub value: f64,
    pub v_prime: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepKind {
    /// First radius, from the slope at the origin.
    Bootstrap,
    Newton,
    Bisection,
    Expansion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoStep {
    pub kind: StepKind,
    pub point: ValuePoint,
    pub inner_iterations: usize,
    pub cumulative_iterations: usize,
    pub subproblem_status: SpgStatus,
    pub history: Vec<IterRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParetoStatus {
    RootFound,
    BudgetExhausted,
    /// The target lies below the smallest reachable misfit.
    InfeasibleSigma,
}

#[derive(Debug, Clone)]
pub struct ParetoTrace {
    pub sigma: f64,
    pub steps: Vec<ParetoStep>,
    pub final_tau: f64,
    pub final_x: Vec<f64>,
    pub final_weights: SourceWeights,
    pub final_value: f64,
    pub status: ParetoStatus,
}

impl ParetoTrace {
    /// `|v(tau_final) - sigma^2|`.
    pub fn root_residual(&self) -> f64 {
        (self.final_value - self.sigma * self.sigma).abs()
    }

    pub fn total_inner_iterations(&self) -> usize {
        self.steps.last().map_or(0, |s| s.cumulative_iterations)
    }
}

/// `v(tau)` and the frozen-weight slope at the subproblem solution.
pub fn value_function(
    inst: &Instance,
    tau: f64,
    warm_start: Option<&[f64]>,
    cfg: &SpgConfig,
) -> Result<(ValuePoint, SubproblemResult)> {
    let gauge = cfg.resolved_gauge(inst.num_channels());
    let start = warm_start.map(|w| project_l1(w, tau)).transpose()?;
    let res = run_spg(inst, Objective::Projected(gauge), tau, start.as_deref(), cfg)?;
    let point = ValuePoint {
        tau,
        value: res.value,
        v_prime: -res.dual_quantity,
    };
    Ok((point, res))
}

/// Weights-estimated root finding on the reduced objective.
pub fn solve_bpdn(inst: &Instance, cfg: &ParetoConfig) -> Result<ParetoTrace> {
    cfg.validate()?;
    let gauge = cfg.subproblem.resolved_gauge(inst.num_channels());
    root_find(inst, Objective::Projected(gauge), cfg)
}

/// Root finding with the weights held at `alpha`.
pub fn solve_fixed_weights(inst: &Instance, alpha: &SourceWeights, cfg: &ParetoConfig) -> Result<ParetoTrace> {
    cfg.validate()?;
    check_len("source weights", inst.num_channels(), alpha.len())?;
    root_find(inst, Objective::Fixed(alpha), cfg)
}

fn weights_at_origin(inst: &Instance, objective: Objective<'_>) -> SourceWeights {
    match objective {
        Objective::Fixed(alpha) => alpha.clone(),
        Objective::Projected(_) => SourceWeights::zeros(inst.num_channels()),
    }
}

fn root_find(inst: &Instance, objective: Objective<'_>, cfg: &ParetoConfig) -> Result<ParetoTrace> {
    let sigma = cfg.sigma.unwrap_or(inst.sigma());
    let target = sigma * sigma;
    let v0 = inst.data_norm_sq();
    let n = inst.domain_dim();
    let origin = |status| ParetoTrace {
        sigma,
        steps: Vec::new(),
        final_tau: 0.0,
        final_x: vec![0.0; n],
        final_weights: weights_at_origin(inst, objective),
        final_value: v0,
        status,
    };
    if target >= v0 * (1.0 - 4.0 * f64::EPSILON) {
        return Ok(origin(ParetoStatus::RootFound));
    }
    let boot = bootstrap(inst, objective);
    let Some(mut tau) = cfg.value_form.newton(0.0, v0, sigma, boot.slope) else {
        return Ok(origin(ParetoStatus::InfeasibleSigma));
    };
    let budget_mode = sigma == 0.0;
    let tol = cfg.root_tol * target.max(1.0);
    let mut warm = boot.direction;
    let mut kind = StepKind::Bootstrap;
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    let mut used = 0usize;
    let mut prev_gap: Option<f64> = None;
    let mut steps = Vec::new();
    let mut last: Option<SubproblemResult> = None;
    let mut status = ParetoStatus::BudgetExhausted;

    for _ in 0..cfg.max_newton_steps.max(1) {
        let remaining = cfg.total_iteration_budget.saturating_sub(used);
        if remaining == 0 {
            break;
        }
        let sub_cfg = SpgConfig {
            max_iters: cfg.subproblem.max_iters.min(remaining),
            ..cfg.subproblem
        };
        let start = project_l1(&warm, tau)?;
        let res = run_spg(inst, objective, tau, Some(&start), &sub_cfg)?;
        used += res.iterations.max(1);
        let point = ValuePoint {
            tau,
            value: res.value,
            v_prime: -res.dual_quantity,
        };
        log::debug!(
            "tau {:.6e} v {:.6e} v' {:.3e} inner {} ({:?})",
            tau,
            res.value,
            point.v_prime,
            res.iterations,
            res.status
        );
        steps.push(ParetoStep {
            kind,
            point,
            inner_iterations: res.iterations,
            cumulative_iterations: used,
            subproblem_status: res.status,
            history: res.history.clone(),
        });
        let gap = res.value - target;
        if !budget_mode && gap.abs() <= tol {
            status = ParetoStatus::RootFound;
            last = Some(res);
            break;
        }
        let interior = l1_norm(&res.x) < tau * (1.0 - 1e-6);
        if gap > 0.0 && interior && res.status == SpgStatus::Converged {
            status = ParetoStatus::InfeasibleSigma;
            last = Some(res);
            break;
        }
        if gap > 0.0 {
            lo = lo.max(tau);
        } else {
            hi = hi.min(tau);
        }
        let newton = cfg.value_form.newton(tau, res.value, sigma, res.dual_quantity);
        let stalled = hi.is_finite() && prev_gap.is_some_and(|p| gap.abs() > 0.5 * p.abs());
        (tau, kind) = match newton {
            Some(t) if t > lo && t < hi && !stalled => (t, StepKind::Newton),
            _ if hi.is_finite() => (0.5 * (lo + hi), StepKind::Bisection),
            _ => (tau * cfg.bracket_expansion, StepKind::Expansion),
        };
        prev_gap = Some(gap);
        warm = res.x.clone();
        last = Some(res);
    }

    let Some(res) = last else {
        return Ok(origin(ParetoStatus::BudgetExhausted));
    };
    Ok(ParetoTrace {
        sigma,
        steps,
        final_tau: res.tau,
        final_x: res.x,
        final_weights: res.weights,
        final_value: res.value,
        status,
    })
}

/// Weight gauge a config resolves to for `inst`.
pub fn resolved_gauge(inst: &Instance, cfg: &ParetoConfig) -> WeightGauge {
    cfg.subproblem.resolved_gauge(inst.num_channels())
}
