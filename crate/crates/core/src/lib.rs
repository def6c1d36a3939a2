//! Sparse recovery under a bilinear forward model `d_i = alpha_i B_i x + noise`
//! with unknown complex per-channel weights `alpha_i`.
//!
//! The weights are eliminated by variable projection: for every trial `x`
//! the optimal weights are solved in closed form and the reduced objective
//! `g(x, alpha(x))` is minimized over an l1 ball with a spectral projected
//! gradient method. An outer safeguarded Newton iteration on the Pareto
//! value function `v(tau)` picks the l1 radius that meets a residual target
//! `sigma`, in the manner of SPGL1.
//!
//! Modules:
//! - [`linops`]: matrix-free operators with verified adjoints.
//! - [`projections`]: Euclidean projection onto the l1 ball.
//! - [`varpro`]: weight projection, reduced objective and gradient.
//! - [`spg`]: the fixed-radius subproblem solver.
//! - [`pareto`]: root finding on the value function.
//! - [`synth`]: synthetic instances, oracles and recovery metrics.
//! - [`instance_io`]: textual instance files.
//!
//! With the `parallel` feature (default) per-channel work runs on rayon;
//! every reduction is ordered so results do not depend on thread count.

pub mod error;
pub mod exec;
pub mod instance_io;
pub mod linops;
pub mod pareto;
pub mod projections;
pub mod spg;
pub mod synth;
pub mod varpro;

pub use error::{Error, Result};
pub use exec::Execution;
pub use linops::{LinearOperator, OperatorRef};
pub use num_complex::Complex64;
pub use pareto::{
    solve_bpdn, solve_fixed_weights, value_function, ParetoConfig, ParetoStatus, ParetoStep, StepKind,
    ParetoTrace, ValueForm, ValuePoint,
};
pub use projections::{project_l1, project_l1_oracle, L1Ball};
pub use spg::{
    projected_gradient_residual, solve_lasso, solve_lasso_fixed, IterRecord, SpgConfig, SpgStatus,
    SubproblemResult,
};
pub use synth::{
    generate_file,
    generate, joint_oracle, recovery_metrics, GroundTruth, ProblemSpec, RecoveryMetrics,
    RowLayout, WeightModel,
};
pub use varpro::{
    eval_fixed_weight_objective, eval_projected_objective, normalize_pair, solve_weights,
    ChannelOperator, Instance, ObjectiveEval, SourceWeights, WeightGauge,
};
