//! Seeded self-checks against independent oracles: adjoint dot-product tests,
//! the brute-force l1 projection, finite-difference gradients and the
//! alternating joint oracle.

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparse_varpro::linops::{adjoint_test, CorruptedAdjoint, TransformKind};
use sparse_varpro::projections::l1_norm;
use sparse_varpro::{
    eval_projected_objective, generate, joint_oracle, project_l1, project_l1_oracle, solve_lasso, OperatorRef,
    ProblemSpec, SpgConfig, WeightGauge, WeightModel,
};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    Adjoint,
    Projection,
    Gradient,
    JointOracle,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Adjoint => "adjoint",
            CheckKind::Projection => "projection",
            CheckKind::Gradient => "gradient",
            CheckKind::JointOracle => "joint-oracle",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub kind: CheckKind,
    pub seed: u64,
    /// Worst observed discrepancy.
    pub error: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.error <= self.tolerance
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed())
    }

    pub fn into_result(self) -> Result<Self, CliError> {
        match self.first_failure() {
            Some(c) => Err(CliError::Verify(format!(
                "{} check failed for seed {} (error {:.2e} > {:.0e})",
                c.kind.name(),
                c.seed,
                c.error,
                c.tolerance
            ))),
            None => Ok(self),
        }
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.checks.is_empty() {
            return writeln!(f, "0 checks");
        }
        writeln!(f, "{:<14} {:>6} {:>10} {:>10}  result", "check", "seed", "error", "tol")?;
        for c in &self.checks {
            writeln!(
                f,
                "{:<14} {:>6} {:>10.2e} {:>10.0e}  {}",
                c.kind.name(),
                c.seed,
                c.error,
                c.tolerance,
                if c.passed() { "pass" } else { "FAIL" }
            )?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed()).count();
        writeln!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyOptions {
    /// Negates every channel adjoint before the adjoint check.
    pub corrupt_adjoint: bool,
}

pub fn verify(seeds: Range<u64>, opts: VerifyOptions) -> Result<VerifyReport, CliError> {
    let mut report = VerifyReport::default();
    for seed in seeds {
        report.checks.push(adjoint_check(seed, opts)?);
        report.checks.push(projection_check(seed)?);
        report.checks.push(gradient_check(seed)?);
        report.checks.push(oracle_check(seed)?);
    }
    Ok(report)
}

/// Parses `A..B` (half-open).
pub fn parse_seed_range(s: &str) -> Result<Range<u64>, CliError> {
    let bad = || CliError::Config(format!("seed range must look like A..B, got `{s}`"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let a: u64 = a.trim().parse().map_err(|_| bad())?;
    let b: u64 = b.trim().parse().map_err(|_| bad())?;
    if b < a {
        return Err(bad());
    }
    Ok(a..b)
}

fn adjoint_check(seed: u64, opts: VerifyOptions) -> Result<Check, CliError> {
    let transform = [TransformKind::Identity, TransformKind::Dct, TransformKind::OrthonormalWavelet][(seed % 3) as usize];
    let (inst, _) = generate(&ProblemSpec {
        n: 64,
        k: 4,
        channels: 4,
        rows_per_channel: 6,
        transform,
        seed,
        ..ProblemSpec::default()
    })?;
    let mut error = 0.0f64;
    for ch in inst.channels() {
        let op: OperatorRef = if opts.corrupt_adjoint {
            Arc::new(CorruptedAdjoint(ch.op.clone()))
        } else {
            ch.op.clone()
        };
        error = error.max(adjoint_test(op.as_ref(), 20, seed)?);
    }
    Ok(Check {
        kind: CheckKind::Adjoint,
        seed,
        error,
        tolerance: 1e-10,
    })
}

fn projection_check(seed: u64) -> Result<Check, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut error = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(1..=32);
        let z: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let tau = rng.random_range(0.0..25.0);
        let p = project_l1(&z, tau)?;
        let o = project_l1_oracle(&z, tau)?;
        error = p.iter().zip(&o).fold(error, |m, (a, b)| m.max((a - b).abs()));
    }
    Ok(Check {
        kind: CheckKind::Projection,
        seed,
        error,
        tolerance: 1e-10,
    })
}

fn gradient_check(seed: u64) -> Result<Check, CliError> {
    let (inst, _) = generate(&ProblemSpec {
        n: 32,
        k: 3,
        channels: 3,
        rows_per_channel: 5,
        noise_level: 0.1,
        weight_model: WeightModel::RandomPhase,
        seed,
        ..ProblemSpec::default()
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let x: Vec<f64> = (0..inst.domain_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let h = 1e-6 * x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut error = 0.0f64;
    for gauge in [WeightGauge::Free, WeightGauge::unit(inst.num_channels())] {
        let g = eval_projected_objective(&inst, &x, gauge)?.gradient;
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let fd = (eval_projected_objective(&inst, &xp, gauge)?.value - eval_projected_objective(&inst, &xm, gauge)?.value)
                / (2.0 * h);
            num += (g[j] - fd).powi(2);
            den += fd * fd;
        }
        error = error.max(num.sqrt() / den.sqrt().max(f64::MIN_POSITIVE));
    }
    Ok(Check {
        kind: CheckKind::Gradient,
        seed,
        error,
        tolerance: 1e-6,
    })
}

fn oracle_check(seed: u64) -> Result<Check, CliError> {
    let (inst, truth) = generate(&ProblemSpec {
        n: 8,
        k: 2,
        channels: 3,
        rows_per_channel: 4,
        weight_model: WeightModel::RandomPhase,
        noise_level: 0.1,
        seed,
        ..ProblemSpec::default()
    })?;
    let tau = 0.6 * l1_norm(&truth.x_true);
    let cfg = SpgConfig {
        max_iters: 100_000,
        opt_tol: 1e-12,
        ..SpgConfig::default()
    };
    let res = solve_lasso(&inst, tau, None, &cfg)?;
    let oracle = joint_oracle(&inst, tau, 50, seed, cfg.resolved_gauge(inst.num_channels()))?;
    Ok(Check {
        kind: CheckKind::JointOracle,
        seed,
        error: (res.value - oracle.value).abs() / oracle.value.max(f64::MIN_POSITIVE),
        tolerance: 1e-4,
    })
}
