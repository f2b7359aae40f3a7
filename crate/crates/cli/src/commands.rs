use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use log::{info, warn};
use nalgebra::{DMatrix, DVector};
use proxpda::consensus::{consensus_stationarity_check, NetworkVariant};
use proxpda::diagnostics::{nu_hat, stationarity_residual};
use proxpda::factorization::{run_mf_with, MfState};
use proxpda::params::{
    convex_coefficient_bound, inexact_params, ip_coefficient, nonconvex_params, penalty_bound,
    proximal_coefficient_bound,
};
use proxpda::solver::{Penalty, StopRule};
use proxpda::{
    ConstraintSystem, ConvergenceTrace, ErrorSchedule, MfParams, Network, PenaltyParams, PenaltySchedule,
    SmoothObjective, Solver, SolverConfig, Variant,
};
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{GraphSpec, Init, Loaded, PenaltyMode, ProblemKind};

/// How a completed command ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    NotConverged,
}

/// Problem constants the parameter rules consume.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Constants {
    pub lipschitz: f64,
    pub sigma_min: f64,
    pub norm_btb: f64,
    pub delta: f64,
    pub convex: bool,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Resolved {
    pub c: f64,
    pub beta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<PenaltySchedule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_schedule: Option<ErrorSchedule>,
}

impl Resolved {
    pub fn penalty(&self) -> Penalty {
        match self.schedule {
            Some(schedule) => Penalty::Schedule { schedule, c: self.c },
            None => Penalty::Fixed(PenaltyParams {
                c: self.c,
                beta: self.beta,
            }),
        }
    }

    pub fn network_schedule(&self) -> Result<PenaltySchedule> {
        Ok(match self.schedule {
            Some(s) => s,
            None => PenaltySchedule::constant(self.beta)?,
        })
    }
}

/// Chooses `(c, β)` or the schedule from the config, filling unset values
/// from the bounds that apply to `variant`.
pub fn resolve_penalty(loaded: &Loaded, k: Constants) -> Result<Resolved> {
    let s = &loaded.config.solver;
    let v = s.variant;
    if v.is_increasing() {
        let schedule = match s.penalty {
            PenaltyMode::Schedule => PenaltySchedule::power(s.beta0.unwrap_or(1.0), s.alpha.unwrap_or(0.5))?,
            PenaltyMode::Fixed => {
                let beta = match s.beta {
                    Some(b) => b,
                    None => nonconvex_params(k.delta, k.lipschitz, k.norm_btb, k.sigma_min, s.margin)?.beta,
                };
                PenaltySchedule::constant(beta)?
            }
        };
        let c = match (s.c, schedule.omega()) {
            (Some(c), _) => c,
            (None, w) if w > 0.0 => ip_coefficient(k.lipschitz, w, k.norm_btb)?,
            (None, _) => 1.0 / (4.0 * k.lipschitz),
        };
        return Ok(Resolved {
            c,
            beta: schedule.beta(0),
            schedule: Some(schedule),
            error_schedule: None,
        });
    }
    ensure!(
        s.penalty == PenaltyMode::Fixed,
        "penalty = \"schedule\" needs an increasing-penalty variant (prox_pda_ip, prox_gpda_ip), got {v}"
    );
    let inexact = v == Variant::InProxPda;
    let error_schedule = inexact
        .then(|| ErrorSchedule::new(s.eps0.unwrap_or(1.0), s.error_exponent.unwrap_or(1.0)))
        .transpose()?;
    let l_eff = if inexact { k.lipschitz + 1.0 } else { k.lipschitz };
    let (c, beta) = match (s.c, s.beta) {
        (Some(c), Some(b)) => (c, b),
        (None, Some(b)) if k.convex => (
            convex_coefficient_bound(b, k.lipschitz, k.sigma_min, k.norm_btb, k.delta)?,
            b,
        ),
        (None, Some(b)) => {
            let c = s.margin * proximal_coefficient_bound(k.delta, k.lipschitz, k.norm_btb, k.sigma_min)?;
            (c, b)
        }
        (Some(c), None) => (c, s.margin * penalty_bound(c, l_eff, k.sigma_min)?),
        (None, None) if inexact => {
            let p = inexact_params(k.delta, k.lipschitz, k.norm_btb, k.sigma_min, s.margin)?;
            (p.c, p.beta)
        }
        (None, None) => {
            let p = nonconvex_params(k.delta, k.lipschitz, k.norm_btb, k.sigma_min, s.margin)?;
            (p.c, p.beta)
        }
    };
    ensure!(
        beta > 0.0 && c > 0.0,
        "penalty β and coefficient c must be positive (β = {beta}, c = {c})"
    );
    if !k.convex {
        if let Ok(bound) = penalty_bound(c, l_eff, k.sigma_min) {
            if beta <= bound {
                warn!(
                    "β = {beta} is at or below the nonconvex penalty bound β* = {bound:.6e}; descent is not guaranteed"
                );
            }
        }
    }
    Ok(Resolved {
        c,
        beta,
        schedule: None,
        error_schedule,
    })
}

fn network_variant(v: Variant) -> Result<NetworkVariant> {
    Ok(match v {
        Variant::ProxGpda => NetworkVariant::Extra,
        Variant::ProxPda => NetworkVariant::ProxPda,
        Variant::ProxGpdaIp => NetworkVariant::Ip,
        other => bail!("network mode supports prox_pda, prox_gpda and prox_gpda_ip, got {other}"),
    })
}

/// The `BᵀB` a consensus run uses for `variant`.
fn proximal_variant(v: Variant) -> NetworkVariant {
    if v.is_increasing() {
        NetworkVariant::Ip
    } else {
        NetworkVariant::Extra
    }
}

fn output_path(out: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        out.join(p)
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Rows `r,node,x_0,…` of per-node iterates.
struct NodeTrace {
    writer: csv::Writer<Vec<u8>>,
}

impl NodeTrace {
    fn new(k: usize) -> Result<Self> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["r".to_string(), "node".to_string()];
        header.extend((0..k).map(|j| format!("x_{j}")));
        writer.write_record(&header)?;
        Ok(NodeTrace { writer })
    }

    fn push(&mut self, r: usize, xs: &[DVector<f64>]) -> Result<()> {
        for (i, x) in xs.iter().enumerate() {
            let mut row = vec![r.to_string(), i.to_string()];
            row.extend(x.iter().map(|v| v.to_string()));
            self.writer.write_record(&row)?;
        }
        Ok(())
    }

    fn finish(self) -> Result<String> {
        let bytes = self.writer.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
        Ok(String::from_utf8(bytes)?)
    }
}

fn initial_point(loaded: &Loaded, n: usize) -> DVector<f64> {
    match loaded.config.solver.init {
        Init::Zeros => DVector::zeros(n),
        Init::Random => {
            let mut rng = loaded.init_rng();
            DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
        }
    }
}

fn stop_rule(loaded: &Loaded) -> StopRule {
    StopRule {
        phi: loaded.config.solver.phi,
        max_iters: loaded.config.solver.max_iters,
    }
}

fn with_echo(loaded: &Loaded, mut trace: ConvergenceTrace) -> ConvergenceTrace {
    let mut echo = loaded.echo();
    echo.append(&mut trace.config_echo);
    trace.config_echo = echo;
    trace
}

fn trace_summary(trace: &ConvergenceTrace, phi: f64) -> Value {
    let last = trace.last();
    json!({
        "converged": trace.converged(),
        "iterations": trace.len(),
        "phi": phi,
        "final_q": last.map(|r| r.gap_q),
        "final_potential": last.map(|r| r.potential),
        "final_constraint_violation": last.map(|r| r.constraint_violation),
        "nu_hat": nu_hat(&trace.gaps()),
        "notes": trace.notes,
    })
}

fn finish(
    loaded: &Loaded,
    out: &Path,
    trace: ConvergenceTrace,
    mut summary: Value,
    nodes: Option<NodeTrace>,
    started: Instant,
) -> Result<Status> {
    let o = &loaded.config.output;
    let trace = with_echo(loaded, trace);
    let trace_path = output_path(out, &o.trace);
    write(&trace_path, &trace.to_csv())?;
    if let Some(nodes) = nodes {
        write(&output_path(out, &o.node_trace), &nodes.finish()?)?;
    }
    let converged = trace.converged();
    if let Value::Object(map) = &mut summary {
        if let Value::Object(t) = trace_summary(&trace, loaded.config.solver.phi) {
            map.extend(t);
        }
        map.insert("trace".into(), json!(trace_path));
        map.insert("wall_time_s".into(), json!(started.elapsed().as_secs_f64()));
    }
    let report_path = output_path(out, &o.report);
    write(&report_path, &serde_json::to_string_pretty(&summary)?)?;
    let q = trace.last().map_or(f64::NAN, |r| r.gap_q);
    println!(
        "{} after {} iterations, final Q = {q:.3e} (phi = {:e})",
        if converged { "converged" } else { "not converged" },
        trace.len(),
        loaded.config.solver.phi
    );
    println!("trace: {}", trace_path.display());
    println!("report: {}", report_path.display());
    Ok(if converged {
        Status::Success
    } else {
        Status::NotConverged
    })
}

fn consensus_constants(p: &proxpda::ConsensusProblem, v: Variant) -> Constants {
    Constants {
        lipschitz: p.lipschitz(),
        sigma_min: p.sigma_min(),
        norm_btb: p.norm_btb(proximal_variant(v)),
        delta: p.locals().iter().map(|f| f.delta()).fold(0.0, f64::max),
        convex: p.locals().iter().all(|f| f.is_convex()),
    }
}

fn generic_constants(f: &dyn SmoothObjective, cs: &ConstraintSystem, proximal: &DMatrix<f64>) -> Constants {
    Constants {
        lipschitz: f.lipschitz(),
        sigma_min: cs.sigma_min(),
        norm_btb: proxpda::linalg::sym_max_eigenvalue(proximal),
        delta: f.delta(),
        convex: f.is_convex(),
    }
}

fn solver_config(loaded: &Loaded, r: &Resolved, proximal: DMatrix<f64>, x0: DVector<f64>) -> SolverConfig {
    let s = &loaded.config.solver;
    let mut cfg = SolverConfig::new(s.variant, r.penalty(), proximal)
        .with_stop(s.phi, s.max_iters)
        .with_x0(x0);
    if let Some(e) = r.error_schedule {
        cfg = cfg.with_error_schedule(e);
    }
    cfg
}

pub fn solve(loaded: &Loaded, out: &Path) -> Result<Status> {
    match loaded.config.problem.kind {
        ProblemKind::Consensus => solve_consensus(loaded, out),
        ProblemKind::Generic => solve_generic(loaded, out),
        ProblemKind::MatrixFactorization => mf(loaded, out),
    }
}

fn solve_consensus(loaded: &Loaded, out: &Path) -> Result<Status> {
    let started = Instant::now();
    let p = loaded.consensus()?;
    let s = &loaded.config.solver;
    let k = consensus_constants(&p, s.variant);
    let r = resolve_penalty(loaded, k)?;
    info!(
        "consensus over {} nodes, {} edges; c = {}, beta = {}",
        p.n_nodes(),
        p.graph().n_edges(),
        r.c,
        r.beta
    );
    let x0 = initial_point(loaded, p.n_nodes() * p.k());
    let mut nodes = loaded
        .config
        .output
        .per_node
        .then(|| NodeTrace::new(p.k()))
        .transpose()?;
    let mut node_err = Ok(());
    let (trace, x, mu, extra) = if s.network {
        let nv = network_variant(s.variant)?;
        let mut net = Network::new(&p, nv, r.network_schedule()?, &p.unstack(&x0))?;
        let run = net.run_with(stop_rule(loaded), r.c, |n, rec| {
            if let Some(t) = nodes.as_mut() {
                if node_err.is_ok() {
                    node_err = t.push(rec.r + 1, &n.xs());
                }
            }
        })?;
        let extra = json!({ "mode": "network", "rounds": run.rounds, "messages": run.messages });
        (run.trace, net.stacked_x(), net.stacked_mu(), extra)
    } else {
        let cfg = solver_config(loaded, &r, p.proximal(proximal_variant(s.variant)), x0);
        let mut solver = Solver::new(p.objective(), p.constraints(), cfg)?;
        let res = solver.run_with(|_, o, rec| {
            if let Some(t) = nodes.as_mut() {
                if node_err.is_ok() {
                    node_err = t.push(rec.r + 1, &p.unstack(&o.next.x));
                }
            }
        })?;
        (
            res.trace,
            res.final_state.x,
            res.final_state.mu,
            json!({ "mode": "centralized" }),
        )
    };
    node_err?;
    let (grad_res, viol) = stationarity_residual(p.objective(), p.constraints(), &x, &mu);
    let xs = p.unstack(&x);
    let st = consensus_stationarity_check(&xs, p.locals(), s.phi.sqrt().max(1e-12));
    let summary = json!({
        "kind": "consensus",
        "variant": s.variant,
        "run": extra,
        "constants": k,
        "params": r,
        "stationarity": { "lagrangian_gradient": grad_res, "constraint_violation": viol },
        "consensus": { "spread": st.spread, "gradient_sum_norm": st.gradient_sum_norm },
        "x": xs.iter().map(|v| v.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>(),
    });
    finish(loaded, out, trace, summary, nodes, started)
}

fn solve_generic(loaded: &Loaded, out: &Path) -> Result<Status> {
    let started = Instant::now();
    let g = loaded.generic()?;
    let s = &loaded.config.solver;
    ensure!(!s.network, "network mode applies to consensus problems only");
    let k = generic_constants(g.f.as_ref(), &g.cs, &g.proximal);
    let r = resolve_penalty(loaded, k)?;
    info!(
        "generic problem with {} variables, {} constraints; c = {}, beta = {}",
        g.cs.n_vars(),
        g.cs.n_rows(),
        r.c,
        r.beta
    );
    let x0 = initial_point(loaded, g.cs.n_vars());
    let cfg = solver_config(loaded, &r, g.proximal.clone(), x0);
    let mut solver = Solver::new(g.f.as_ref(), &g.cs, cfg)?;
    let mut nodes = loaded
        .config
        .output
        .per_node
        .then(|| NodeTrace::new(g.cs.n_vars()))
        .transpose()?;
    let mut node_err = Ok(());
    let res = solver.run_with(|_, o, rec| {
        if let Some(t) = nodes.as_mut() {
            if node_err.is_ok() {
                node_err = t.push(rec.r + 1, std::slice::from_ref(&o.next.x));
            }
        }
    })?;
    node_err?;
    let x = &res.final_state.x;
    let (grad_res, viol) = stationarity_residual(g.f.as_ref(), &g.cs, x, &res.final_state.mu);
    let summary = json!({
        "kind": "generic",
        "variant": s.variant,
        "constants": k,
        "params": r,
        "stationarity": { "lagrangian_gradient": grad_res, "constraint_violation": viol },
        "x": x.iter().copied().collect::<Vec<_>>(),
    });
    finish(loaded, out, res.trace, summary, nodes, started)
}

fn mf_params(loaded: &Loaded, p: &proxpda::MfProblem) -> Result<MfParams> {
    let s = &loaded.config.solver;
    let suggested = p.suggest_params(s.nu.unwrap_or(0.1))?;
    Ok(MfParams {
        c: s.c.unwrap_or(suggested.c),
        d: s.d.unwrap_or(suggested.d),
        beta: s.beta.unwrap_or(suggested.beta),
    })
}

pub fn mf(loaded: &Loaded, out: &Path) -> Result<Status> {
    ensure!(
        loaded.config.problem.kind == ProblemKind::MatrixFactorization,
        "the mf command needs kind = \"matrix_factorization\""
    );
    let started = Instant::now();
    let p = loaded.mf()?;
    let params = mf_params(loaded, &p)?;
    let report = p.conditions(params);
    if !report.passed() {
        bail!(
            "factorization parameters violate condition(s) {:?} (residuals {:?}); raise beta",
            report.failed(),
            report.residuals
        );
    }
    info!(
        "factorization M = {}, K = {}, N = {}; {params:?}",
        p.m(),
        p.k(),
        p.n_nodes()
    );
    let mut rng = loaded.init_rng();
    let x0 = match loaded.config.solver.init {
        Init::Zeros => DMatrix::zeros(p.m(), p.k()),
        Init::Random => DMatrix::from_fn(p.m(), p.k(), |_, _| rng.gen_range(-1.0..1.0)),
    };
    let y0 = DMatrix::zeros(p.k(), p.n_nodes());
    let state = MfState::consensus(&p, &x0, &y0)?;
    let mut nodes = loaded
        .config
        .output
        .per_node
        .then(|| NodeTrace::new(p.m() * p.k()))
        .transpose()?;
    let mut node_err = Ok(());
    let run = run_mf_with(
        &p,
        params,
        stop_rule(loaded),
        state,
        Default::default(),
        |_, next, rec| {
            if let Some(t) = nodes.as_mut() {
                if node_err.is_ok() {
                    let xs: Vec<DVector<f64>> = next
                        .x
                        .iter()
                        .map(|m| DVector::from_column_slice(m.as_slice()))
                        .collect();
                    node_err = t.push(rec.r + 1, &xs);
                }
            }
        },
    )?;
    node_err?;
    let summary = json!({
        "kind": "matrix_factorization",
        "params": params,
        "sigma_min": p.sigma_min(),
        "norm_btb": p.norm_btb(),
        "condition_residuals": report.residuals,
        "spread": run.final_state.spread(),
        "max_y_norm_sq": run.max_y_norm_sq,
        "tau": p.tau(),
    });
    finish(loaded, out, run.trace, summary, nodes, started)
}

pub fn params(loaded: &Loaded, out: &Path) -> Result<Status> {
    let report = match loaded.config.problem.kind {
        ProblemKind::Consensus => {
            let p = loaded.consensus()?;
            let k = consensus_constants(&p, Variant::ProxPda);
            println!(
                "consensus: {} nodes, {} edges, dimension {}",
                p.n_nodes(),
                p.graph().n_edges(),
                p.k()
            );
            let mut r = bound_report(loaded, k)?;
            let norm_ip = p.norm_btb(NetworkVariant::Ip);
            println!("‖BᵀB‖ (increasing penalty, L₊ + I) = {norm_ip:.6}");
            r["norm_btb_ip"] = json!(norm_ip);
            r["kind"] = json!("consensus");
            r
        }
        ProblemKind::Generic => {
            let g = loaded.generic()?;
            let n = g.cs.n_vars();
            let nullity = g.cs.nullity();
            println!(
                "generic: {n} variables, {} constraints, rank(A) = {}",
                g.cs.n_rows(),
                n - nullity
            );
            let mut r = bound_report(loaded, generic_constants(g.f.as_ref(), &g.cs, &g.proximal))?;
            let mut notes = Vec::new();
            if nullity > 0 {
                let note = format!(
                    "A is rank deficient: null space of dimension {nullity}; σ_min is the smallest nonzero eigenvalue of AᵀA"
                );
                println!("note: {note}");
                notes.push(note);
            }
            if !g.cs.is_consistent(1e-9) {
                let note = "b is not in the range of A; the constraints are infeasible".to_string();
                println!("note: {note}");
                notes.push(note);
            }
            r["kind"] = json!("generic");
            r["rank"] = json!(n - nullity);
            r["nullity"] = json!(nullity);
            r["notes"] = json!(notes);
            r
        }
        ProblemKind::MatrixFactorization => {
            let p = loaded.mf()?;
            let params = mf_params(loaded, &p)?;
            let cond = p.conditions(params);
            println!(
                "matrix factorization: M = {}, K = {}, N = {}",
                p.m(),
                p.k(),
                p.n_nodes()
            );
            println!("σ_min(L₋) = {:.6}", p.sigma_min());
            println!("‖L₊‖ = {:.6}", p.norm_btb());
            println!("c = {:.6}, d = {:.6}, β = {:.6e}", params.c, params.d, params.beta);
            println!(
                "condition residuals {:?} ({})",
                cond.residuals,
                if cond.passed() { "pass" } else { "fail" }
            );
            json!({
                "kind": "matrix_factorization",
                "sigma_min": p.sigma_min(),
                "norm_btb": p.norm_btb(),
                "tau": p.tau(),
                "gamma_reg": p.gamma_reg(),
                "params": params,
                "condition_residuals": cond.residuals,
                "conditions_passed": cond.passed(),
            })
        }
    };
    let path = out.join("params.json");
    write(&path, &serde_json::to_string_pretty(&report)?)?;
    println!("json: {}", path.display());
    Ok(Status::Success)
}

/// Prints and collects every bound that applies to constants `k`.
fn bound_report(loaded: &Loaded, k: Constants) -> Result<Value> {
    let margin = loaded.config.solver.margin;
    println!("σ_min(AᵀA) = {:.6}", k.sigma_min);
    println!("‖BᵀB‖ = {:.6}", k.norm_btb);
    println!("L = {:.6}", k.lipschitz);
    println!("δ = {:.6}", k.delta);
    println!("convex: {}", k.convex);
    let mut r = json!({ "constants": k, "margin": margin });
    match nonconvex_params(k.delta, k.lipschitz, k.norm_btb, k.sigma_min, margin) {
        Ok(p) => {
            let raw_c = proximal_coefficient_bound(k.delta, k.lipschitz, k.norm_btb, k.sigma_min)?;
            let raw_beta = penalty_bound(p.c, k.lipschitz, k.sigma_min)?;
            println!(
                "nonconvex: c > {raw_c:.6}, β > {raw_beta:.6} → c = {:.6}, β = {:.6}",
                p.c, p.beta
            );
            r["nonconvex"] = json!({ "c_bound": raw_c, "beta_bound": raw_beta, "c": p.c, "beta": p.beta });
            let beta = loaded.config.solver.beta.unwrap_or(p.beta);
            if k.convex {
                let c = convex_coefficient_bound(beta, k.lipschitz, k.sigma_min, k.norm_btb, k.delta)?;
                println!("convex: at β = {beta:.6}, c = {c:.6}");
                r["convex"] = json!({ "beta": beta, "c": c });
            }
        }
        Err(e) => {
            println!("nonconvex: unavailable ({e})");
            r["nonconvex"] = json!({ "error": e.to_string() });
        }
    }
    match inexact_params(k.delta, k.lipschitz, k.norm_btb, k.sigma_min, margin) {
        Ok(p) => {
            println!("inexact: c = {:.6}, β = {:.6}", p.c, p.beta);
            r["inexact"] = json!(p);
        }
        Err(e) => r["inexact"] = json!({ "error": e.to_string() }),
    }
    let s = &loaded.config.solver;
    let schedule = PenaltySchedule::power(s.beta0.unwrap_or(1.0), s.alpha.unwrap_or(0.5))?;
    match ip_coefficient(k.lipschitz, schedule.omega(), k.norm_btb) {
        Ok(c) => {
            println!(
                "increasing penalty: {schedule:?}, ω = {:.6}, c = {c:.6}",
                schedule.omega()
            );
            r["increasing"] = json!({ "schedule": schedule, "omega": schedule.omega(), "c": c });
        }
        Err(e) => r["increasing"] = json!({ "error": e.to_string() }),
    }
    Ok(r)
}

pub fn graph(spec: &str, seed: u64, out: Option<&Path>) -> Result<Status> {
    let g = GraphSpec::parse(spec)?.build(seed)?;
    info!(
        "{spec}: {} nodes, {} edges, {} component(s)",
        g.n_nodes(),
        g.n_edges(),
        g.n_components()
    );
    let text = g.to_edge_list();
    match out {
        Some(dir) => {
            let path = dir.join("graph.txt");
            write(&path, &text)?;
            println!("{} nodes, {} edges → {}", g.n_nodes(), g.n_edges(), path.display());
        }
        None => print!("{text}"),
    }
    Ok(Status::Success)
}
