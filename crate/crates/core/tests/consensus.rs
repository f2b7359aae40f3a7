mod common;

use std::sync::Arc;

use common::*;
use nalgebra::DVector;
use proxpda::consensus::{consensus_stationarity_check, ConsensusProblem, Network, NetworkVariant};
use proxpda::linalg::max_abs_diff;
use proxpda::solver::Solver;
use proxpda::{ExecMode, Graph, PenaltySchedule, SmoothObjective};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn path2_problem() -> ConsensusProblem {
    ConsensusProblem::new(
        Graph::path(2).unwrap(),
        vec![shifted_quadratic(1.0, 0.0), shifted_quadratic(1.0, 2.0)],
    )
    .unwrap()
}

fn centralized_iterates(
    p: &ConsensusProblem,
    variant: NetworkVariant,
    schedule: PenaltySchedule,
    x0: &[DVector<f64>],
    rounds: usize,
) -> Vec<DVector<f64>> {
    let cfg = p
        .centralized_config(variant, schedule, 1.0, x0)
        .with_stop(0.0, rounds)
        .with_iterates();
    let mut s = Solver::new(p.objective(), p.constraints(), cfg).unwrap();
    s.run().unwrap().iterates.unwrap().into_iter().map(|(x, _)| x).collect()
}

fn network_iterates(
    p: &ConsensusProblem,
    variant: NetworkVariant,
    schedule: PenaltySchedule,
    x0: &[DVector<f64>],
    rounds: usize,
) -> Vec<DVector<f64>> {
    let mut net = Network::new(p, variant, schedule, x0).unwrap();
    let mut out = vec![net.stacked_x()];
    for _ in 0..rounds {
        net.step().unwrap();
        out.push(net.stacked_x());
    }
    out
}

#[test]
fn extra_path2_matches_matrix_form_and_centralized() {
    let p = path2_problem();
    let x0 = scalars(&[0.5, -1.0]);
    let s = PenaltySchedule::constant(10.0).unwrap();
    let net = network_iterates(&p, NetworkVariant::Extra, s, &x0, 300);
    let mat = extra_matrix_run(p.graph(), p.locals(), &x0, 10.0, 300);
    let cen = centralized_iterates(&p, NetworkVariant::Extra, s, &x0, 300);
    assert_eq!(cen.len(), 301);
    for r in 0..=300 {
        assert!(max_abs_diff(&net[r], &flatten(&mat[r])) < 1e-12, "matrix r={r}");
        assert!(max_abs_diff(&net[r], &cen[r]) < 1e-10, "centralized r={r}");
    }
    let long = network_iterates(&p, NetworkVariant::Extra, s, &x0, 5000);
    let last = &long[5000];
    assert!((last[0] - 1.0).abs() < 1e-8 && (last[1] - 1.0).abs() < 1e-8, "{last}");
}

#[test]
fn proxpda_quadratic_matches_matrix_form_and_centralized() {
    let g = Graph::cycle(5).unwrap();
    let h = [1.0, 2.0, 0.5, 1.5, 3.0];
    let a = [0.0, 1.0, -2.0, 4.0, 0.5];
    let locals: Vec<Arc<dyn SmoothObjective>> = h.iter().zip(a).map(|(h, a)| shifted_quadratic(*h, a)).collect();
    let p = ConsensusProblem::new(g.clone(), locals).unwrap();
    let x0v = [1.0, -1.0, 0.0, 2.0, 0.3];
    let x0 = scalars(&x0v);
    let beta = 4.0;
    let s = PenaltySchedule::constant(beta).unwrap();
    let net = network_iterates(&p, NetworkVariant::ProxPda, s, &x0, 400);
    let mat = proxpda_matrix_run_quadratic(&g, &h, &a, &x0v, beta, 400);
    let cen = centralized_iterates(&p, NetworkVariant::ProxPda, s, &x0, 400);
    for r in 0..=400 {
        assert!(max_abs_diff(&net[r], &mat[r]) < 1e-10, "matrix r={r}");
        assert!(max_abs_diff(&net[r], &cen[r]) < 1e-10, "centralized r={r}");
    }
    // weighted mean is the consensus minimizer
    let target = h.iter().zip(a).map(|(h, a)| h * a).sum::<f64>() / h.iter().sum::<f64>();
    for v in net[400].iter() {
        assert!((v - target).abs() < 1e-6);
    }
}

#[test]
fn ip_sqrt_schedule_matches_matrix_form_and_centralized() {
    let p = path2_problem();
    let x0 = scalars(&[3.0, -1.0]);
    let s = PenaltySchedule::power(1.0, 0.5).unwrap();
    let net = network_iterates(&p, NetworkVariant::Ip, s, &x0, 500);
    let mat = ip_matrix_run(p.graph(), p.locals(), &x0, |r| s.beta(r), 500);
    let cen = centralized_iterates(&p, NetworkVariant::Ip, s, &x0, 500);
    for r in 0..=500 {
        assert!(max_abs_diff(&net[r], &flatten(&mat[r])) < 1e-10, "matrix r={r}");
        assert!(max_abs_diff(&net[r], &cen[r]) < 1e-10, "centralized r={r}");
    }
}

#[test]
fn ip_constant_schedule_is_fixed_matrix_recursion() {
    let g = Graph::cycle(4).unwrap();
    let locals: Vec<Arc<dyn SmoothObjective>> = (0..4).map(|i| tanh_plus_quadratic(1.0, i as f64, 0.1, 0.0)).collect();
    let p = ConsensusProblem::new(g.clone(), locals).unwrap();
    let x0 = scalars(&[0.0, 1.0, 2.0, -1.0]);
    let s = PenaltySchedule::constant(5.0).unwrap();
    let net = network_iterates(&p, NetworkVariant::Ip, s, &x0, 200);
    let mat = ip_matrix_run(&g, p.locals(), &x0, |_| 5.0, 200);
    for r in 0..=200 {
        assert!(max_abs_diff(&net[r], &flatten(&mat[r])) < 1e-12);
    }
}

#[test]
fn permuted_and_parallel_rounds_are_bitwise_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g = Graph::erdos_renyi(10, 0.5, &mut rng).unwrap();
    let locals: Vec<Arc<dyn SmoothObjective>> = (0..10).map(|_| random_mixture(&mut rng)).collect();
    let p = ConsensusProblem::new(g, locals).unwrap();
    let x0: Vec<DVector<f64>> = (0..10)
        .map(|_| DVector::from_element(1, rng.gen_range(-1.0..1.0)))
        .collect();
    let beta = p.nonconvex_params(1.01).unwrap().beta;
    for variant in [NetworkVariant::Extra, NetworkVariant::ProxPda] {
        let s = PenaltySchedule::constant(beta).unwrap();
        let mut seq = Network::new(&p, variant, s, &x0)
            .unwrap()
            .with_exec(ExecMode::Sequential);
        let mut par = Network::new(&p, variant, s, &x0).unwrap().with_exec(ExecMode::Parallel);
        let mut perm = Network::new(&p, variant, s, &x0).unwrap();
        let mut order: Vec<usize> = (0..10).collect();
        for _ in 0..100 {
            seq.step().unwrap();
            par.step().unwrap();
            order.shuffle(&mut rng);
            perm.step_in_order(&order).unwrap();
            assert_eq!(seq.xs(), par.xs());
            assert_eq!(seq.xs(), perm.xs());
        }
        let cen = centralized_iterates(&p, variant, s, &x0, 100);
        assert!(max_abs_diff(&seq.stacked_x(), &cen[100]) < 1e-10, "{variant}");
    }
}

#[test]
fn non_neighbor_perturbation_does_not_reach_node() {
    let g = Graph::path(5).unwrap();
    let locals: Vec<Arc<dyn SmoothObjective>> = (0..5).map(|i| tanh_plus_quadratic(1.0, i as f64, 0.2, 1.0)).collect();
    let p = ConsensusProblem::new(g, locals).unwrap();
    let base = scalars(&[0.1, 0.2, 0.3, 0.4, 0.5]);
    let mut moved = base.clone();
    moved[4][0] = 9.0;
    for variant in NetworkVariant::ALL {
        let s = if variant == NetworkVariant::Ip {
            PenaltySchedule::power(2.0, 0.5).unwrap()
        } else {
            PenaltySchedule::constant(20.0).unwrap()
        };
        let mut a = Network::new(&p, variant, s, &base).unwrap();
        let mut b = Network::new(&p, variant, s, &moved).unwrap();
        a.step().unwrap();
        b.step().unwrap();
        // node 4 is two hops from node 2
        for i in 0..3 {
            assert_eq!(a.xs()[i], b.xs()[i], "{variant} node {i}");
        }
        assert_ne!(a.xs()[3], b.xs()[3]);
    }
}

#[test]
fn neighbor_sum_history_rotates() {
    let p = path2_problem();
    let mut net = Network::new(
        &p,
        NetworkVariant::Extra,
        PenaltySchedule::constant(10.0).unwrap(),
        &scalars(&[0.0, 4.0]),
    )
    .unwrap();
    for _ in 0..5 {
        let before: Vec<_> = net.nodes().iter().map(|n| n.neighbor_sum.clone()).collect();
        net.step().unwrap();
        for (n, s) in net.nodes().iter().zip(&before) {
            assert_eq!(&n.neighbor_sum_prev, s);
        }
        let xs = net.xs();
        assert_eq!(net.nodes()[0].neighbor_sum, xs[1]);
        assert_eq!(net.nodes()[1].neighbor_sum, xs[0]);
    }
}

#[test]
fn nonconvex_cycle_reaches_stationary_consensus() {
    let g = Graph::cycle(5).unwrap();
    let shifts = [-1.0, 0.0, 0.5, 1.0, 2.0];
    let locals: Vec<Arc<dyn SmoothObjective>> = shifts.iter().map(|a| tanh_plus_quadratic(1.0, *a, 0.1, *a)).collect();
    let p = ConsensusProblem::new(g, locals).unwrap();
    let params = p.nonconvex_params(1.01).unwrap();
    let mut net = Network::new(
        &p,
        NetworkVariant::ProxPda,
        PenaltySchedule::constant(params.beta).unwrap(),
        &scalars(&[0.0; 5]),
    )
    .unwrap();
    let run = net
        .run(
            proxpda::solver::StopRule {
                phi: 1e-14,
                max_iters: 20_000,
            },
            params.c,
        )
        .unwrap();
    assert!(run.trace.converged(), "final Q {:?}", run.trace.last());
    let rep = consensus_stationarity_check(&net.xs(), p.locals(), 1e-5);
    assert!(rep.passed(), "{rep:?}");
    let sum_deriv = |x: f64| {
        p.locals()
            .iter()
            .map(|f| f.gradient(&DVector::from_element(1, x))[0])
            .sum::<f64>()
    };
    let xbar = net.xs()[0][0];
    let root = bisect(sum_deriv, xbar - 0.5, xbar + 0.5);
    assert!((xbar - root).abs() < 1e-5);
    assert_eq!(run.messages, run.rounds * 10);
}
