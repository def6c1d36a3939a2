//! Experiment configuration files.
//!
//! TOML by default; a `.json` extension selects JSON. Every section is
//! optional and falls back to its defaults.
//!
//! ```toml
//! mode = "all"
//! output_dir = "out/desk"
//! emit = ["trace-csv", "metrics-json"]
//!
//! [problem]
//! n = 256
//! k = 8
//! channels = 6
//! seed = 3
//!
//! [solver]
//! sigma = 0.0
//! total_iteration_budget = 150
//!
//! [solver.subproblem]
//! max_iters = 15
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sparse_varpro::{ParetoConfig, ProblemSpec};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    TrueWeights,
    UnitWeights,
    EstimatedWeights,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::TrueWeights, Mode::UnitWeights, Mode::EstimatedWeights];

    pub fn name(self) -> &'static str {
        match self {
            Mode::TrueWeights => "true-weights",
            Mode::UnitWeights => "unit-weights",
            Mode::EstimatedWeights => "estimated-weights",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeSelection {
    TrueWeights,
    UnitWeights,
    EstimatedWeights,
    #[default]
    All,
}

impl ModeSelection {
    pub fn modes(self) -> Vec<Mode> {
        match self {
            ModeSelection::TrueWeights => vec![Mode::TrueWeights],
            ModeSelection::UnitWeights => vec![Mode::UnitWeights],
            ModeSelection::EstimatedWeights => vec![Mode::EstimatedWeights],
            ModeSelection::All => Mode::ALL.to_vec(),
        }
    }

    pub fn parse(s: &str) -> Result<Self, CliError> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| CliError::Config(format!("unknown mode `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Emit {
    TraceCsv,
    MetricsJson,
    SolutionVectors,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub solver: ParetoConfig,
    pub mode: ModeSelection,
    pub output_dir: PathBuf,
    pub emit: Vec<Emit>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemSpec::default(),
            solver: ParetoConfig::default(),
            mode: ModeSelection::All,
            output_dir: PathBuf::from("out"),
            emit: vec![Emit::TraceCsv, Emit::MetricsJson],
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(one_line(&e.to_string())))
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cfg = if is_json(path) {
            Self::from_json(&text)?
        } else {
            Self::from_toml(&text)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.problem.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.solver.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn emits(&self, what: Emit) -> bool {
        self.emit.contains(&what)
    }
}

/// Reads a bare [`ProblemSpec`] in the same TOML/JSON convention.
pub fn load_problem_spec(path: &Path) -> Result<ProblemSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let spec: ProblemSpec = if is_json(path) {
        serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?
    } else {
        toml::from_str(&text).map_err(|e| CliError::Config(one_line(&e.to_string())))?
    };
    spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(spec)
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

// toml errors span several lines with a source excerpt
fn one_line(msg: &str) -> String {
    msg.lines().map(str::trim).filter(|l| !l.is_empty()).collect::<Vec<_>>().join(" ")
}
