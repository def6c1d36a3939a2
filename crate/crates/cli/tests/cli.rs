use std::fs;
use std::path::Path;
use std::process::Command;

use sparse_varpro::{ParetoConfig, ProblemSpec, SpgConfig};
use sparse_varpro_cli::{run_experiment, Emit, ExperimentConfig, Mode, ModeSelection};

fn budget_config(dir: &Path) -> ExperimentConfig {
    ExperimentConfig {
        solver: ParetoConfig {
            sigma: Some(0.0),
            total_iteration_budget: 150,
            subproblem: SpgConfig {
                max_iters: 15,
                ..SpgConfig::default()
            },
            ..ParetoConfig::default()
        },
        output_dir: dir.to_path_buf(),
        emit: vec![Emit::TraceCsv, Emit::MetricsJson, Emit::SolutionVectors],
        ..ExperimentConfig::default()
    }
}

fn svp() -> Command {
    Command::new(env!("CARGO_BIN_EXE_svp"))
}

#[test]
fn all_modes_on_desk_instance() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run_experiment(&budget_config(dir.path())).unwrap();
    for mode in Mode::ALL {
        let text = fs::read_to_string(dir.path().join(format!("trace_{}.csv", mode.name()))).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# schema: svp-trace v1"));
        assert_eq!(
            lines.next(),
            Some("mode,newton_step,inner_iter,tau,objective,projected_grad_norm,cumulative_iters")
        );
        assert!(lines.all(|l| l.starts_with(mode.name())));
        assert!(dir.path().join(format!("solution_{}.json", mode.name())).exists());
    }
    let est = outcome.run(Mode::EstimatedWeights).unwrap();
    let unit = outcome.run(Mode::UnitWeights).unwrap();
    assert!(est.metrics.model_error < unit.metrics.model_error);
    assert!(est.trace.total_inner_iterations() <= 150);

    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["schema_version"], 1);
    assert_eq!(metrics["modes"].as_array().unwrap().len(), 3);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(&budget_config(a.path())).unwrap();
    run_experiment(&budget_config(b.path())).unwrap();
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 7);
    for name in names {
        assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap(), "{name:?}");
    }
}

#[test]
fn reachable_sigma_meets_root_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        problem: ProblemSpec {
            noise_level: 0.05,
            ..ProblemSpec::default()
        },
        solver: ParetoConfig {
            total_iteration_budget: 50_000,
            subproblem: SpgConfig {
                max_iters: 5000,
                opt_tol: 1e-10,
                ..SpgConfig::default()
            },
            ..ParetoConfig::default()
        },
        mode: ModeSelection::EstimatedWeights,
        output_dir: dir.path().to_path_buf(),
        emit: vec![Emit::MetricsJson],
    };
    run_experiment(&cfg).unwrap();
    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("metrics.json")).unwrap()).unwrap();
    let m = &metrics["modes"][0];
    assert_eq!(m["mode"], "estimated-weights");
    assert_eq!(m["status"], "root-found");
    assert!(m["root_residual"].as_f64().unwrap() <= m["root_tol"].as_f64().unwrap());
}

#[test]
fn empty_emission_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let cfg_path = dir.path().join("cfg.toml");
    fs::write(
        &cfg_path,
        "emit = []\nmode = \"unit-weights\"\n[problem]\nn = 64\nk = 3\nchannels = 4\nrows_per_channel = 10\n[solver]\nsigma = 0.0\ntotal_iteration_budget = 50\n",
    )
    .unwrap();
    let res = svp().args(["run", "--config"]).arg(&cfg_path).arg("--out").arg(&out).output().unwrap();
    assert_eq!(res.status.code(), Some(0));
    assert!(String::from_utf8(res.stdout).unwrap().starts_with("unit-weights: status"));
    assert!(!out.exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "mode = \"wrong-weights\"\n").unwrap();
    let res = svp().args(["run", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(res.status.code(), Some(1));
    assert_eq!(String::from_utf8(res.stderr).unwrap().lines().count(), 1);

    let res = svp().args(["run", "--config"]).arg(dir.path().join("missing.toml")).output().unwrap();
    assert_eq!(res.status.code(), Some(2));

    let res = svp().args(["verify", "--seeds", "0..1", "--corrupt-adjoint"]).output().unwrap();
    assert_eq!(res.status.code(), Some(3));
    assert!(String::from_utf8(res.stderr).unwrap().contains("adjoint check failed"));

    let res = svp().args(["verify", "--seeds", "7..7"]).output().unwrap();
    assert_eq!(res.status.code(), Some(0));
    assert_eq!(String::from_utf8(res.stdout).unwrap().trim(), "0 checks");
}

#[test]
fn verify_passes_on_a_seed() {
    let res = svp().args(["verify", "--seeds", "0..2"]).output().unwrap();
    let stdout = String::from_utf8(res.stdout).unwrap();
    assert_eq!(res.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("8 checks, 0 failed"));
}

#[test]
fn generate_writes_an_instance_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    let out = dir.path().join("inst.json");
    fs::write(&spec, r#"{"n": 32, "k": 2, "channels": 2, "rows_per_channel": 6, "seed": 4}"#).unwrap();
    let res = svp().args(["generate", "--spec"]).arg(&spec).arg("--out").arg(&out).output().unwrap();
    assert_eq!(res.status.code(), Some(0));
    let file = sparse_varpro::instance_io::InstanceFile::read(&out).unwrap().unwrap();
    assert_eq!(file.channels.len(), 2);
    assert!(file.truth.is_some());
    file.build().unwrap();
}
