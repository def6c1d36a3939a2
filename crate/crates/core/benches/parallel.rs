use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sparse_varpro::projections::l1_norm;
use sparse_varpro::{
    eval_projected_objective, generate, solve_lasso, Execution, ProblemSpec, SpgConfig, WeightGauge, WeightModel,
};

fn sizes() -> Vec<(&'static str, ProblemSpec)> {
    vec![
        (
            "desk",
            ProblemSpec {
                n: 64,
                k: 5,
                channels: 4,
                rows_per_channel: 16,
                weight_model: WeightModel::RickerSpectrum,
                noise_level: 0.05,
                ..ProblemSpec::default()
            },
        ),
        ("default", ProblemSpec::default()),
        (
            "large",
            ProblemSpec {
                n: 4096,
                k: 40,
                channels: 16,
                rows_per_channel: 120,
                noise_level: 0.05,
                ..ProblemSpec::default()
            },
        ),
    ]
}

const POLICIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn objective(c: &mut Criterion) {
    let mut group = c.benchmark_group("projected_objective");
    for (name, spec) in sizes() {
        let (inst, truth) = generate(&spec).unwrap();
        let gauge = WeightGauge::unit(spec.channels);
        for (policy, exec) in POLICIES {
            let inst = inst.clone().with_execution(exec);
            group.bench_with_input(BenchmarkId::new(policy, name), &truth.x_true, |b, x| {
                b.iter(|| eval_projected_objective(&inst, x, gauge).unwrap())
            });
        }
    }
    group.finish();
}

fn subproblem(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_lasso_50_iters");
    group.sample_size(10);
    let cfg = SpgConfig {
        max_iters: 50,
        opt_tol: 0.0,
        ..SpgConfig::default()
    };
    for (name, spec) in sizes() {
        let (inst, truth) = generate(&spec).unwrap();
        let tau = 0.5 * l1_norm(&truth.x_true);
        for (policy, exec) in POLICIES {
            let inst = inst.clone().with_execution(exec);
            group.bench_function(BenchmarkId::new(policy, name), |b| {
                b.iter(|| solve_lasso(&inst, tau, None, &cfg).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, objective, subproblem);
criterion_main!(benches);
