//! The three-way comparison: the same instance solved with the true weights,
//! with unit weights, and with weights estimated by variable projection.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sparse_varpro::{
    generate, normalize_pair, recovery_metrics, solve_bpdn, solve_fixed_weights, GroundTruth, Instance,
    ParetoConfig, ParetoStatus, ParetoTrace, RecoveryMetrics, SourceWeights,
};

use crate::config::{Emit, ExperimentConfig, Mode};
use crate::error::CliError;

pub const TRACE_SCHEMA: &str = "# schema: svp-trace v1";
pub const METRICS_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct ModeRun {
    pub mode: Mode,
    pub trace: ParetoTrace,
    pub metrics: RecoveryMetrics,
    /// Solution rescaled so the weights have the norm of the true weights.
    pub x_normalized: Vec<f64>,
    pub weights_normalized: SourceWeights,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeReport {
    pub mode: Mode,
    pub status: ParetoStatus,
    pub sigma: f64,
    pub final_tau: f64,
    pub final_value: f64,
    /// `|v(tau) - sigma^2|` at the returned radius.
    pub root_residual: f64,
    pub root_tol: f64,
    pub newton_steps: usize,
    pub total_inner_iterations: usize,
    pub metrics: RecoveryMetrics,
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricsFile {
    pub schema_version: u32,
    pub seed: u64,
    pub noise_norm: f64,
    pub modes: Vec<ModeReport>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub runs: Vec<ModeRun>,
    pub written: Vec<PathBuf>,
}

impl ExperimentOutcome {
    pub fn summary(&self) -> String {
        self.runs
            .iter()
            .map(|r| {
                format!(
                    "{}: status {:?}, model error {:.3e}, max phase error {:.3e}, {} inner iterations",
                    r.mode.name(),
                    r.trace.status,
                    r.metrics.model_error,
                    r.metrics.max_phase_error,
                    r.trace.total_inner_iterations()
                )
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn run(&self, mode: Mode) -> Option<&ModeRun> {
        self.runs.iter().find(|r| r.mode == mode)
    }
}

fn solve_mode(inst: &Instance, truth: &GroundTruth, mode: Mode, cfg: &ParetoConfig) -> Result<ModeRun, CliError> {
    log::info!("running {}", mode.name());
    let trace = match mode {
        Mode::TrueWeights => solve_fixed_weights(inst, &truth.alpha_true, cfg)?,
        Mode::UnitWeights => solve_fixed_weights(inst, &SourceWeights::ones(inst.num_channels()), cfg)?,
        Mode::EstimatedWeights => solve_bpdn(inst, cfg)?,
    };
    let weights = match mode {
        Mode::TrueWeights => truth.alpha_true.clone(),
        Mode::UnitWeights => SourceWeights::ones(inst.num_channels()),
        Mode::EstimatedWeights => trace.final_weights.clone(),
    };
    let metrics = recovery_metrics(&trace.final_x, &weights, truth)?;
    let (x_normalized, weights_normalized) = normalize_pair(&trace.final_x, &weights, truth.alpha_true.norm())?;
    Ok(ModeRun {
        mode,
        trace,
        metrics,
        x_normalized,
        weights_normalized,
    })
}

#[cfg(feature = "parallel")]
fn solve_modes(inst: &Instance, truth: &GroundTruth, modes: &[Mode], cfg: &ParetoConfig) -> Vec<Result<ModeRun, CliError>> {
    use rayon::prelude::*;
    modes.par_iter().map(|&m| solve_mode(inst, truth, m, cfg)).collect()
}

#[cfg(not(feature = "parallel"))]
fn solve_modes(inst: &Instance, truth: &GroundTruth, modes: &[Mode], cfg: &ParetoConfig) -> Vec<Result<ModeRun, CliError>> {
    modes.iter().map(|&m| solve_mode(inst, truth, m, cfg)).collect()
}

/// Generates the instance, solves every requested mode and writes the
/// requested artifacts into `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome, CliError> {
    cfg.validate()?;
    let (inst, truth) = generate(&cfg.problem)?;
    let runs = solve_modes(&inst, &truth, &cfg.mode.modes(), &cfg.solver)
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

    let mut written = Vec::new();
    if !cfg.emit.is_empty() {
        let dir = &cfg.output_dir;
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        if cfg.emits(Emit::TraceCsv) {
            for run in &runs {
                let path = dir.join(format!("trace_{}.csv", run.mode.name()));
                write_trace(&path, run)?;
                written.push(path);
            }
        }
        if cfg.emits(Emit::MetricsJson) {
            let path = dir.join("metrics.json");
            let file = MetricsFile {
                schema_version: METRICS_SCHEMA_VERSION,
                seed: cfg.problem.seed,
                noise_norm: truth.noise_norm,
                modes: runs.iter().map(|r| report(r, &cfg.solver)).collect(),
            };
            write_json(&path, &file)?;
            written.push(path);
        }
        if cfg.emits(Emit::SolutionVectors) {
            for run in &runs {
                let path = dir.join(format!("solution_{}.json", run.mode.name()));
                write_json(
                    &path,
                    &SolutionFile {
                        schema_version: METRICS_SCHEMA_VERSION,
                        mode: run.mode,
                        tau: run.trace.final_tau,
                        x: &run.x_normalized,
                        weights: &run.weights_normalized,
                    },
                )?;
                written.push(path);
            }
        }
    }
    Ok(ExperimentOutcome { runs, written })
}

fn report(run: &ModeRun, cfg: &ParetoConfig) -> ModeReport {
    ModeReport {
        mode: run.mode,
        status: run.trace.status,
        sigma: run.trace.sigma,
        final_tau: run.trace.final_tau,
        final_value: run.trace.final_value,
        root_residual: run.trace.root_residual(),
        root_tol: cfg.root_tol,
        newton_steps: run.trace.steps.len(),
        total_inner_iterations: run.trace.total_inner_iterations(),
        metrics: run.metrics.clone(),
    }
}

#[derive(Serialize)]
struct SolutionFile<'a> {
    schema_version: u32,
    mode: Mode,
    tau: f64,
    x: &'a [f64],
    weights: &'a SourceWeights,
}

#[derive(Serialize)]
struct TraceRow {
    mode: &'static str,
    newton_step: usize,
    inner_iter: usize,
    tau: f64,
    objective: f64,
    projected_grad_norm: f64,
    cumulative_iters: usize,
}

/// One row per inner iterate of every subproblem, including each
/// subproblem's starting point as `inner_iter = 0`.
pub fn trace_rows(run: &ModeRun) -> Vec<(usize, usize, f64, f64, f64, usize)> {
    let mut rows = Vec::new();
    let mut before = 0;
    for (s, step) in run.trace.steps.iter().enumerate() {
        for (j, rec) in step.history.iter().enumerate() {
            rows.push((s, j, step.point.tau, rec.value, rec.pg_norm, before + j));
        }
        before = step.cumulative_iterations;
    }
    rows
}

fn write_trace(path: &Path, run: &ModeRun) -> Result<(), CliError> {
    let mut file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    writeln!(file, "{TRACE_SCHEMA}").map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    for (newton_step, inner_iter, tau, objective, projected_grad_norm, cumulative_iters) in trace_rows(run) {
        w.serialize(TraceRow {
            mode: run.mode.name(),
            newton_step,
            inner_iter,
            tau,
            objective,
            projected_grad_norm,
            cumulative_iters,
        })
        .map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path, e))?;
    fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}
