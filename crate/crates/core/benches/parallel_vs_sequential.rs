use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::{DMatrix, DVector};
use proxpda::factorization::{mf_round, YStepPolicy};
use proxpda::problem::{ComponentKind, ComponentSum, ScalarComponent};
use proxpda::solver::{run_batch, BatchJob, Penalty};
use proxpda::{
    ConsensusProblem, ExecMode, Graph, MfProblem, MfState, Network, NetworkVariant, PenaltySchedule, Regularizer,
    SmoothObjective, SolverConfig, Variant,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODES: [(ExecMode, &str); 2] = [(ExecMode::Sequential, "sequential"), (ExecMode::Parallel, "parallel")];

fn local(rng: &mut ChaCha8Rng, k: usize) -> Arc<dyn SmoothObjective> {
    let blocks: Vec<Arc<dyn SmoothObjective>> = (0..k)
        .map(|_| {
            Arc::new(
                ComponentSum::new(vec![
                    ScalarComponent::new(ComponentKind::Tanh, rng.gen_range(-2.0..2.0), 1.0).unwrap(),
                    ScalarComponent::new(ComponentKind::Quadratic { q: 0.2 }, rng.gen_range(-2.0..2.0), 1.0).unwrap(),
                ])
                .unwrap(),
            ) as Arc<dyn SmoothObjective>
        })
        .collect();
    Arc::new(proxpda::problem::SeparableObjective::new(blocks).unwrap())
}

fn consensus_instance(n: usize, k: usize, seed: u64) -> ConsensusProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = Graph::erdos_renyi(n, 8.0 / n as f64, &mut rng).unwrap();
    let locals = (0..n).map(|_| local(&mut rng, k)).collect();
    ConsensusProblem::new(g, locals).unwrap()
}

fn network_rounds(c: &mut Criterion) {
    let p = consensus_instance(200, 4, 1);
    let beta = p.nonconvex_params(1.01).unwrap().beta;
    let x0: Vec<DVector<f64>> = (0..200).map(|i| DVector::from_element(4, (i as f64).sin())).collect();
    let mut group = c.benchmark_group("network_round");
    for variant in [NetworkVariant::Extra, NetworkVariant::ProxPda] {
        for (mode, name) in MODES {
            group.bench_function(BenchmarkId::new(variant.name(), name), |b| {
                let mut net = Network::new(&p, variant, PenaltySchedule::constant(beta).unwrap(), &x0)
                    .unwrap()
                    .with_exec(mode);
                b.iter(|| black_box(net.step().unwrap()));
            });
        }
    }
    group.finish();
}

fn mf_rounds(c: &mut Criterion) {
    let (p, x, y) = MfProblem::planted(
        40,
        4,
        Graph::cycle(32).unwrap(),
        0.1,
        4.0,
        Regularizer::L1 { lambda: 0.01 },
        5,
    )
    .unwrap();
    let beta = p.suggest_params(1.0).unwrap().beta;
    let x0 = &x + DMatrix::from_element(x.nrows(), x.ncols(), 0.1);
    let state = MfState::consensus(&p, &x0, &y).unwrap();
    let mut group = c.benchmark_group("mf_round");
    for (mode, name) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| black_box(mf_round(&state, &p, beta, YStepPolicy::default(), mode).unwrap()));
        });
    }
    group.finish();
}

fn batch_runs(c: &mut Criterion) {
    let problems: Vec<ConsensusProblem> = (0..16).map(|s| consensus_instance(12, 1, 100 + s)).collect();
    let jobs: Vec<BatchJob> = problems
        .iter()
        .map(|p| {
            let params = p.nonconvex_params(1.01).unwrap();
            BatchJob {
                f: p.objective(),
                cs: p.constraints(),
                config: SolverConfig::new(
                    Variant::ProxPda,
                    Penalty::Fixed(params),
                    p.proximal(NetworkVariant::ProxPda),
                )
                .with_x0(DVector::from_element(12, 1.0))
                .with_stop(0.0, 200),
            }
        })
        .collect();
    let mut group = c.benchmark_group("run_batch");
    group.sample_size(10);
    for (mode, name) in MODES {
        group.bench_function(name, |b| b.iter(|| black_box(run_batch(&jobs, mode))));
    }
    group.finish();
}

criterion_group!(benches, network_rounds, mf_rounds, batch_runs);
criterion_main!(benches);
