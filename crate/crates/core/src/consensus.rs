//! Node-local simulation of distributed consensus.
//!
//! The problem `min Σ_i f_i(x_i) s.t. x_i = x_j for every edge` is the
//! linearly constrained problem with `A` the signed incidence matrix (lifted
//! by `⊗ I_K`) and `b = 0`. Choosing `BᵀB = L₊` eliminates the dual variable
//! and turns each iteration into a recursion in which node `i` only needs its
//! own history and the sums `S_i = Σ_{j∈N(i)} x_j` from the current and
//! previous round.
//!
//! Rounds are synchronous: every node computes its next value from frozen
//! round-`r` data (phase 1), then aggregates are exchanged (phase 2). Phase 1
//! may run in parallel and the result never depends on evaluation order.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{gap_q_from, potential_from_value, ConvergenceTrace, IterationRecord, Termination};
use crate::exec::{map_indexed, ExecMode};
use crate::graph::{incidence, Graph, GraphError, IncidenceMatrices};
use crate::linalg::{kron_identity, solve_symmetric};
use crate::params::{
    nonconvex_params, penalty_bound, proximal_coefficient_bound, ParamError, PenaltyParams, PenaltySchedule,
};
use crate::problem::{ConstraintSystem, ProblemError, SeparableObjective, SmoothObjective, LIPSCHITZ_FLOOR};
use crate::solver::{Penalty, SolverConfig, StopRule, Variant};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConsensusError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("expected {expected} local objectives / initial points, got {got}")]
    NodeCount { expected: usize, got: usize },
    #[error("node {node}: expected dimension {expected}, got {got}")]
    NodeDimension { node: usize, expected: usize, got: usize },
    #[error("node order is not a permutation of 0..{0}")]
    BadOrder(usize),
    #[error("{0}")]
    Config(String),
    #[error("node {node}: local solver stopped after {iters} iterations with residual {residual:.3e}")]
    LocalCap { node: usize, iters: usize, residual: f64 },
}

/// Which centralized iteration the network reproduces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkVariant {
    /// Linearized step, fixed penalty (the EXTRA recursion).
    Extra,
    /// Exact local proximal step, fixed penalty.
    ProxPda,
    /// Linearized step with an increasing penalty and `BᵀB = L₊ + I`.
    Ip,
}

impl NetworkVariant {
    pub const ALL: [NetworkVariant; 3] = [NetworkVariant::Extra, NetworkVariant::ProxPda, NetworkVariant::Ip];

    pub fn name(self) -> &'static str {
        match self {
            NetworkVariant::Extra => "extra",
            NetworkVariant::ProxPda => "prox_pda",
            NetworkVariant::Ip => "ip",
        }
    }

    /// The centralized solver variant with identical iterates.
    pub fn centralized(self) -> Variant {
        match self {
            NetworkVariant::Extra => Variant::ProxGpda,
            NetworkVariant::ProxPda => Variant::ProxPda,
            NetworkVariant::Ip => Variant::ProxGpdaIp,
        }
    }
}

impl fmt::Display for NetworkVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NetworkVariant {
    type Err = ConsensusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "extra" | "prox_gpda" => Ok(NetworkVariant::Extra),
            "prox_pda" | "proxpda" => Ok(NetworkVariant::ProxPda),
            "ip" | "prox_gpda_ip" => Ok(NetworkVariant::Ip),
            other => Err(ConsensusError::Config(format!("unknown network variant {other:?}"))),
        }
    }
}

/// Which penalty requirement a fixed `β` satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyRegime {
    /// Above the nonconvex bound computed from `L`, `‖L₊‖` and `σ_min(L₋)`.
    Nonconvex,
    /// Only `β > L`, the classical requirement for convex losses.
    ConvexOnly,
    /// Neither.
    Insufficient,
}

/// Consensus problem over a connected graph with one local objective per node,
/// each of dimension `K`.
pub struct ConsensusProblem {
    graph: Graph,
    locals: Vec<Arc<dyn SmoothObjective>>,
    k: usize,
    inc: IncidenceMatrices,
    objective: SeparableObjective,
    constraints: ConstraintSystem,
}

impl fmt::Debug for ConsensusProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConsensusProblem")
            .field("n_nodes", &self.graph.n_nodes())
            .field("n_edges", &self.graph.n_edges())
            .field("k", &self.k)
            .finish()
    }
}

impl ConsensusProblem {
    pub fn new(graph: Graph, locals: Vec<Arc<dyn SmoothObjective>>) -> Result<Self, ConsensusError> {
        graph.require_connected()?;
        if graph.n_edges() == 0 {
            return Err(GraphError::Empty.into());
        }
        let n = graph.n_nodes();
        if locals.len() != n {
            return Err(ConsensusError::NodeCount {
                expected: n,
                got: locals.len(),
            });
        }
        let k = locals[0].dim();
        for (i, f) in locals.iter().enumerate() {
            if f.dim() != k || k == 0 {
                return Err(ConsensusError::NodeDimension {
                    node: i,
                    expected: k.max(1),
                    got: f.dim(),
                });
            }
        }
        let inc = incidence(&graph);
        let objective = SeparableObjective::new(locals.clone())?;
        let a = kron_identity(&inc.signed, k);
        let constraints = ConstraintSystem::new(a, DVector::zeros(graph.n_edges() * k))?;
        Ok(ConsensusProblem {
            graph,
            locals,
            k,
            inc,
            objective,
            constraints,
        })
    }

    /// Every node gets its own copy of `f`.
    pub fn uniform(graph: Graph, f: Arc<dyn SmoothObjective>) -> Result<Self, ConsensusError> {
        let n = graph.n_nodes();
        ConsensusProblem::new(graph, vec![f; n])
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn locals(&self) -> &[Arc<dyn SmoothObjective>] {
        &self.locals
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_nodes(&self) -> usize {
        self.graph.n_nodes()
    }

    pub fn incidence(&self) -> &IncidenceMatrices {
        &self.inc
    }

    /// `Σ_i f_i(x_i)` over the node-major stacked variable.
    pub fn objective(&self) -> &SeparableObjective {
        &self.objective
    }

    /// `(A ⊗ I_K) x = 0`.
    pub fn constraints(&self) -> &ConstraintSystem {
        &self.constraints
    }

    /// `BᵀB`: `L₊ ⊗ I_K`, plus the identity for the increasing-penalty form.
    pub fn proximal(&self, variant: NetworkVariant) -> DMatrix<f64> {
        let mut p = kron_identity(&self.inc.laplacian_signless, self.k);
        if variant == NetworkVariant::Ip {
            for i in 0..p.nrows() {
                p[(i, i)] += 1.0;
            }
        }
        p
    }

    /// `max_i L_i`.
    pub fn lipschitz(&self) -> f64 {
        self.locals
            .iter()
            .map(|f| f.lipschitz())
            .fold(LIPSCHITZ_FLOOR, f64::max)
    }

    /// `σ_min(L₋)`, the smallest nonzero eigenvalue.
    pub fn sigma_min(&self) -> f64 {
        self.constraints.sigma_min()
    }

    /// `‖L₊‖` (plus one for the increasing-penalty form).
    pub fn norm_btb(&self, variant: NetworkVariant) -> f64 {
        let base = crate::linalg::sym_max_eigenvalue(&self.inc.laplacian_signless);
        if variant == NetworkVariant::Ip {
            base + 1.0
        } else {
            base
        }
    }

    /// `(c, β)` for the fixed-penalty recursions with nonconvex losses.
    pub fn nonconvex_params(&self, margin: f64) -> Result<PenaltyParams, ConsensusError> {
        let delta = self.locals.iter().map(|f| f.delta()).fold(0.0, f64::max);
        Ok(nonconvex_params(
            delta,
            self.lipschitz(),
            self.norm_btb(NetworkVariant::Extra),
            self.sigma_min(),
            margin,
        )?)
    }

    /// Classifies a fixed penalty against both requirements.
    pub fn penalty_regime(&self, beta: f64) -> Result<PenaltyRegime, ConsensusError> {
        let l = self.lipschitz();
        let delta = self.locals.iter().map(|f| f.delta()).fold(0.0, f64::max);
        let c = proximal_coefficient_bound(delta, l, self.norm_btb(NetworkVariant::Extra), self.sigma_min())?;
        let bound = penalty_bound(c, l, self.sigma_min())?;
        Ok(if beta > bound {
            PenaltyRegime::Nonconvex
        } else if beta > l {
            PenaltyRegime::ConvexOnly
        } else {
            PenaltyRegime::Insufficient
        })
    }

    /// Node-major stacking `(x_0; x_1; …)`.
    pub fn stack(&self, xs: &[DVector<f64>]) -> DVector<f64> {
        let mut out = DVector::zeros(self.n_nodes() * self.k);
        for (i, x) in xs.iter().enumerate() {
            out.rows_mut(i * self.k, self.k).copy_from(x);
        }
        out
    }

    pub fn unstack(&self, x: &DVector<f64>) -> Vec<DVector<f64>> {
        (0..self.n_nodes())
            .map(|i| x.rows(i * self.k, self.k).into_owned())
            .collect()
    }

    /// Configuration of the centralized solver whose iterates the network
    /// reproduces. `c` only enters the recorded potential.
    pub fn centralized_config(
        &self,
        variant: NetworkVariant,
        schedule: PenaltySchedule,
        c: f64,
        x0: &[DVector<f64>],
    ) -> SolverConfig {
        let penalty = match (variant, schedule) {
            (NetworkVariant::Ip, s) => Penalty::Schedule { schedule: s, c },
            (_, s) => Penalty::Fixed(PenaltyParams { c, beta: s.beta(0) }),
        };
        SolverConfig::new(variant.centralized(), penalty, self.proximal(variant)).with_x0(self.stack(x0))
    }
}

/// Local solver settings for the proximal node update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalSolve {
    /// Stop when the local gradient norm is at most `tol·(1 + 2βd‖ℓ‖)`, a
    /// relative accuracy of about `tol` on `x`. The floor set by the spacing
    /// of floats near `x` is about `1.1e-16·2βd‖ℓ‖`, and the residual passes
    /// straight into the Lagrangian gradient, so the default sits just above it.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for LocalSolve {
    fn default() -> Self {
        LocalSolve {
            tol: 1e-15,
            max_iters: 100_000,
        }
    }
}

/// Everything node `i` stores between rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub id: usize,
    pub degree: usize,
    pub x: DVector<f64>,
    pub x_prev: DVector<f64>,
    /// `∇f_i(x)`.
    pub grad: DVector<f64>,
    /// Gradient carried into the next update: `∇f_i(x_prev)` for the
    /// linearized recursions, `∇f_i(x)` for the proximal one. Zero before the
    /// first round, which is what a zero initial dual amounts to.
    pub grad_mem: DVector<f64>,
    /// `Σ_{j∈N(i)} x_j` at the current round.
    pub neighbor_sum: DVector<f64>,
    /// The same sum one round earlier.
    pub neighbor_sum_prev: DVector<f64>,
    /// Completed rounds.
    pub round: usize,
}

impl NodeState {
    fn degree_f(&self) -> f64 {
        self.degree as f64
    }
}

/// `x_i^{r+1}` of the linearized fixed-penalty recursion:
/// `x − (∇f_i(x) − ∇f_i(x_prev))/(2βd) + S/d − ½(S_prev/d + x_prev)`.
pub fn node_step_extra(node: &NodeState, beta: f64) -> DVector<f64> {
    let d = node.degree_f();
    &node.x - (&node.grad - &node.grad_mem) / (2.0 * beta * d) + &node.neighbor_sum / d
        - (&node.neighbor_sum_prev / d + &node.x_prev) * 0.5
}

/// Anchor `ℓ_i` of the proximal node update:
/// `x + ∇f_i(x)/(2βd) + S/d − ½(S_prev/d + x_prev)`.
pub fn proxpda_anchor(node: &NodeState, beta: f64) -> DVector<f64> {
    let d = node.degree_f();
    &node.x + &node.grad_mem / (2.0 * beta * d) + &node.neighbor_sum / d
        - (&node.neighbor_sum_prev / d + &node.x_prev) * 0.5
}

/// `x_i^{r+1} = argmin f_i(x) + βd‖x − ℓ_i‖²`.
///
/// Quadratic `f_i` is solved in closed form; otherwise gradient descent from
/// `ℓ_i` with step `1/(L_i + 2βd)`.
pub fn node_step_proxpda(
    node: &NodeState,
    f: &dyn SmoothObjective,
    beta: f64,
    local: LocalSolve,
) -> Result<DVector<f64>, ConsensusError> {
    let ell = proxpda_anchor(node, beta);
    let rho = 2.0 * beta * node.degree_f();
    if let Some((h, g)) = f.quadratic_form() {
        let mut m = h;
        for i in 0..m.nrows() {
            m[(i, i)] += rho;
        }
        let rhs = &ell * rho - g;
        if let Some(x) = solve_symmetric(&m, &rhs) {
            return Ok(x);
        }
    }
    let step = 1.0 / (f.lipschitz() + rho);
    let target = local.tol * (1.0 + rho * ell.norm());
    let mut x = ell.clone();
    let mut residual = f64::INFINITY;
    for _ in 0..local.max_iters {
        let g = f.gradient(&x) + (&x - &ell) * rho;
        residual = g.norm();
        if residual <= target {
            return Ok(x);
        }
        x -= g * step;
    }
    Err(ConsensusError::LocalCap {
        node: node.id,
        iters: local.max_iters,
        residual,
    })
}

/// `x_i^{r+1}` of the increasing-penalty recursion with `BᵀB = L₊ + I`:
///
/// ```text
/// β^{r+1}(2d+1) x⁺ = −(∇f_i(x) − ∇f_i(x_prev)) − β^r(d x − S) + β^r(2d+1) x
///                    + β^{r+1}((d+1) x + S) − β^r((d+1) x_prev + S_prev)
/// ```
pub fn node_step_ip(node: &NodeState, beta_next: f64, beta_cur: f64) -> DVector<f64> {
    let d = node.degree_f();
    let x = &node.x;
    let s = &node.neighbor_sum;
    let rhs = -(&node.grad - &node.grad_mem) - (x * d - s) * beta_cur
        + x * (beta_cur * (2.0 * d + 1.0))
        + (x * (d + 1.0) + s) * beta_next
        - (&node.x_prev * (d + 1.0) + &node.neighbor_sum_prev) * beta_cur;
    rhs / (beta_next * (2.0 * d + 1.0))
}

/// Per-round bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundStats {
    /// Index `r` of the completed step `r → r+1`.
    pub r: usize,
    pub beta_next: f64,
    pub beta_cur: f64,
    /// Aggregates sent this round (one per directed edge).
    pub messages: usize,
}

/// Result of [`Network::run`].
#[derive(Debug, Clone)]
pub struct NetworkRun {
    pub trace: ConvergenceTrace,
    pub rounds: usize,
    pub messages: usize,
}

/// Synchronous simulation of all nodes of a [`ConsensusProblem`].
pub struct Network<'a> {
    problem: &'a ConsensusProblem,
    variant: NetworkVariant,
    schedule: PenaltySchedule,
    nodes: Vec<NodeState>,
    neighbors: Vec<Vec<usize>>,
    /// Edge duals `μ_e`, kept by each edge for diagnostics only.
    edge_duals: Vec<DVector<f64>>,
    exec: ExecMode,
    local: LocalSolve,
    messages: usize,
}

impl<'a> Network<'a> {
    /// Fixed-penalty variants need a constant schedule.
    pub fn new(
        problem: &'a ConsensusProblem,
        variant: NetworkVariant,
        schedule: PenaltySchedule,
        x0: &[DVector<f64>],
    ) -> Result<Self, ConsensusError> {
        let n = problem.n_nodes();
        let k = problem.k();
        if x0.len() != n {
            return Err(ConsensusError::NodeCount {
                expected: n,
                got: x0.len(),
            });
        }
        if let Some(i) = x0.iter().position(|x| x.len() != k) {
            return Err(ConsensusError::NodeDimension {
                node: i,
                expected: k,
                got: x0[i].len(),
            });
        }
        if variant != NetworkVariant::Ip && !matches!(schedule, PenaltySchedule::Constant { .. }) {
            return Err(ConsensusError::Config(format!(
                "variant {variant} needs a constant penalty"
            )));
        }
        let neighbors = problem.graph().neighbors();
        let degrees = problem.graph().degrees();
        let mut nodes: Vec<NodeState> = (0..n)
            .map(|i| NodeState {
                id: i,
                degree: degrees[i],
                x: x0[i].clone(),
                x_prev: x0[i].clone(),
                grad: problem.locals()[i].gradient(&x0[i]),
                grad_mem: DVector::zeros(k),
                neighbor_sum: DVector::zeros(k),
                neighbor_sum_prev: DVector::zeros(k),
                round: 0,
            })
            .collect();
        let sums: Vec<DVector<f64>> = (0..n).map(|i| neighbor_sum(&neighbors[i], x0, k)).collect();
        for (node, s) in nodes.iter_mut().zip(sums) {
            node.neighbor_sum_prev = s.clone();
            node.neighbor_sum = s;
        }
        Ok(Network {
            problem,
            variant,
            schedule,
            nodes,
            neighbors,
            edge_duals: vec![DVector::zeros(k); problem.graph().n_edges()],
            exec: ExecMode::default(),
            local: LocalSolve::default(),
            messages: 0,
        })
    }

    pub fn with_exec(mut self, exec: ExecMode) -> Self {
        self.exec = exec;
        self
    }

    pub fn with_local_solve(mut self, local: LocalSolve) -> Self {
        self.local = local;
        self
    }

    pub fn variant(&self) -> NetworkVariant {
        self.variant
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    /// Completed rounds.
    pub fn round(&self) -> usize {
        self.nodes[0].round
    }

    /// Aggregates sent so far.
    pub fn messages(&self) -> usize {
        self.messages
    }

    pub fn xs(&self) -> Vec<DVector<f64>> {
        self.nodes.iter().map(|n| n.x.clone()).collect()
    }

    pub fn stacked_x(&self) -> DVector<f64> {
        self.problem.stack(&self.xs())
    }

    /// Edge-major stacking of the implicit duals, matching `(A ⊗ I_K)`.
    pub fn stacked_mu(&self) -> DVector<f64> {
        let k = self.problem.k();
        let mut out = DVector::zeros(self.edge_duals.len() * k);
        for (e, m) in self.edge_duals.iter().enumerate() {
            out.rows_mut(e * k, k).copy_from(m);
        }
        out
    }

    /// `(β^{r+1}, β^r)` for the step out of round `r`.
    pub fn betas(&self, r: usize) -> (f64, f64) {
        match self.variant {
            NetworkVariant::Ip => (self.schedule.beta(r + 1), self.schedule.beta(r)),
            _ => (self.schedule.beta(r), self.schedule.beta(r)),
        }
    }

    /// `max_{i,j} ‖x_i − x_j‖`.
    pub fn spread(&self) -> f64 {
        spread(&self.xs())
    }

    fn node_update(&self, i: usize, beta_next: f64, beta_cur: f64) -> Result<DVector<f64>, ConsensusError> {
        let node = &self.nodes[i];
        match self.variant {
            NetworkVariant::Extra => Ok(node_step_extra(node, beta_next)),
            NetworkVariant::ProxPda => {
                node_step_proxpda(node, self.problem.locals()[i].as_ref(), beta_next, self.local)
            }
            NetworkVariant::Ip => Ok(node_step_ip(node, beta_next, beta_cur)),
        }
    }

    /// One synchronous round with phase 1 scheduled by the execution mode.
    pub fn step(&mut self) -> Result<RoundStats, ConsensusError> {
        let r = self.round();
        let (bn, bc) = self.betas(r);
        let updates = map_indexed(self.exec, self.nodes.len(), |i| self.node_update(i, bn, bc));
        let updates: Result<Vec<_>, _> = updates.into_iter().collect();
        Ok(self.commit(updates?, r, bn, bc))
    }

    /// One synchronous round with phase 1 evaluated sequentially in `order`.
    pub fn step_in_order(&mut self, order: &[usize]) -> Result<RoundStats, ConsensusError> {
        let n = self.nodes.len();
        let mut seen = vec![false; n];
        for &i in order {
            if i >= n || seen[i] {
                return Err(ConsensusError::BadOrder(n));
            }
            seen[i] = true;
        }
        if order.len() != n {
            return Err(ConsensusError::BadOrder(n));
        }
        let r = self.round();
        let (bn, bc) = self.betas(r);
        let mut updates: Vec<Option<DVector<f64>>> = vec![None; n];
        for &i in order {
            updates[i] = Some(self.node_update(i, bn, bc)?);
        }
        Ok(self.commit(updates.into_iter().map(Option::unwrap).collect(), r, bn, bc))
    }

    /// Phase 2: exchange aggregates, rotate histories, update edge duals.
    fn commit(&mut self, new_x: Vec<DVector<f64>>, r: usize, beta_next: f64, beta_cur: f64) -> RoundStats {
        let k = self.problem.k();
        let locals = self.problem.locals();
        let grads = map_indexed(self.exec, new_x.len(), |i| locals[i].gradient(&new_x[i]));
        let proximal = self.variant == NetworkVariant::ProxPda;
        let mut messages = 0;
        for (i, (x, g)) in new_x.iter().zip(grads).enumerate() {
            let s = neighbor_sum(&self.neighbors[i], &new_x, k);
            messages += self.neighbors[i].len();
            let node = &mut self.nodes[i];
            node.x_prev = std::mem::replace(&mut node.x, x.clone());
            let old_grad = std::mem::replace(&mut node.grad, g);
            node.grad_mem = if proximal { node.grad.clone() } else { old_grad };
            node.neighbor_sum_prev = std::mem::replace(&mut node.neighbor_sum, s);
            node.round += 1;
        }
        for (e, &(i, j)) in self.problem.graph().edges().iter().enumerate() {
            self.edge_duals[e] += (&new_x[i] - &new_x[j]) * beta_next;
        }
        self.messages += messages;
        RoundStats {
            r,
            beta_next,
            beta_cur,
            messages,
        }
    }

    /// Runs until `Q(x^{r+1}, μ^r) ≤ φ` or the round cap, recording the same
    /// quantities as the centralized solver. `c` enters the potential only.
    pub fn run(&mut self, stop: StopRule, c: f64) -> Result<NetworkRun, ConsensusError> {
        self.run_with(stop, c, |_, _| {})
    }

    /// [`Network::run`] calling `observer(network, record)` after every round.
    pub fn run_with<F>(&mut self, stop: StopRule, c: f64, mut observer: F) -> Result<NetworkRun, ConsensusError>
    where
        F: FnMut(&Network<'a>, &IterationRecord),
    {
        let problem = self.problem;
        let cs = problem.constraints();
        let f = problem.objective();
        let btb = problem.proximal(self.variant);
        let shift = match f.lower_bound() {
            lb if lb.is_finite() => lb,
            _ => 0.0,
        };
        let mut trace = ConvergenceTrace {
            config_echo: vec![
                format!("network_variant = {}", self.variant),
                format!("schedule = {:?}", self.schedule),
                format!("c = {c}"),
                format!("phi = {}", stop.phi),
                format!("max_iters = {}", stop.max_iters),
            ],
            ..Default::default()
        };
        let mut termination = Termination::MaxIterations;
        let mut rounds = 0;
        for _ in 0..stop.max_iters {
            let x_old = self.stacked_x();
            let mu_old = self.stacked_mu();
            let stats = self.step()?;
            rounds += 1;
            let x = self.stacked_x();
            let mu = self.stacked_mu();
            let grad = self
                .problem
                .stack(&self.nodes.iter().map(|n| n.grad.clone()).collect::<Vec<_>>());
            let beta = stats.beta_next;
            let coef = if self.variant == NetworkVariant::Ip {
                stats.beta_next * stats.beta_cur
            } else {
                beta
            };
            let fx = f.value(&x) - shift;
            let rec = IterationRecord {
                r: stats.r,
                beta_used: beta,
                aug_lagrangian: potential_from_value(fx, cs, &x, &x_old, &mu, 0.0, beta, 0.0, &btb),
                potential: potential_from_value(fx, cs, &x, &x_old, &mu, c, beta, coef, &btb),
                gap_q: gap_q_from(&grad, cs, &x, &mu_old, beta),
                constraint_violation: cs.violation(&x),
                step_norm: (&x - &x_old).norm(),
                dual_step_norm: (&mu - &mu_old).norm(),
                inexact_residual: None,
            };
            observer(self, &rec);
            trace.records.push(rec);
            if rec.gap_q <= stop.phi {
                termination = Termination::Converged { r: stats.r };
                break;
            }
        }
        trace.termination = Some(termination);
        Ok(NetworkRun {
            trace,
            rounds,
            messages: self.messages,
        })
    }
}

fn neighbor_sum(nbrs: &[usize], xs: &[DVector<f64>], k: usize) -> DVector<f64> {
    let mut s = DVector::zeros(k);
    for &j in nbrs {
        s += &xs[j];
    }
    s
}

/// `max_{i,j} ‖x_i − x_j‖`.
pub fn spread(xs: &[DVector<f64>]) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..xs.len() {
        for j in 0..i {
            m = m.max((&xs[i] - &xs[j]).norm());
        }
    }
    m
}

/// Consensus spread and `‖Σ_i ∇f_i(x̄)‖` at the average point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub spread: f64,
    pub gradient_sum_norm: f64,
    pub tol: f64,
}

impl StationarityReport {
    pub fn passed(&self) -> bool {
        self.spread <= self.tol && self.gradient_sum_norm <= self.tol
    }
}

pub fn consensus_stationarity_check(
    xs: &[DVector<f64>],
    locals: &[Arc<dyn SmoothObjective>],
    tol: f64,
) -> StationarityReport {
    assert_eq!(xs.len(), locals.len(), "one point per local objective");
    let k = xs[0].len();
    let mut mean = DVector::zeros(k);
    for x in xs {
        mean += x;
    }
    mean /= xs.len() as f64;
    let mut g = DVector::zeros(k);
    for f in locals {
        g += f.gradient(&mean);
    }
    StationarityReport {
        spread: spread(xs),
        gradient_sum_norm: g.norm(),
        tol,
    }
}
