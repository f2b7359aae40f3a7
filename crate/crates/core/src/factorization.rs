//! Distributed matrix factorization.
//!
//! Node `i` holds a column `z_i` of `Z ≈ XY`, its own copy `X_i` of the
//! dictionary and its coefficient vector `y_i` with `‖y_i‖² ≤ τ`:
//!
//! ```text
//! min Σ_i ½‖X_i y_i − z_i‖² + γ‖X_i‖²_F + h_i(y_i)   s.t. X_i = X_j on every edge
//! ```
//!
//! Each round updates the local error `θ_i`, the coefficients `y_i` (a
//! proximally regularized ball-constrained problem), the dictionaries `X_i`
//! (one small linear system per node) and the edge duals `Ω_e`.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{ConvergenceTrace, IterationRecord, Termination};
use crate::exec::{map_indexed, ExecMode};
use crate::graph::{incidence, Graph, GraphError};
use crate::linalg::sym_max_eigenvalue;
use crate::params::{mf_conditions, mf_suggest, MfConditionReport, MfParams, ParamError};
use crate::solver::StopRule;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MfError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("{0}")]
    Invalid(String),
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("node {node}: y-step stopped after {iters} iterations with gradient mapping {residual:.3e}")]
    InnerCap { node: usize, iters: usize, residual: f64 },
    #[error("parameter conditions {failed:?} fail (residuals {residuals:?})")]
    Conditions { failed: Vec<usize>, residuals: [f64; 4] },
}

/// Convex penalty `h_i` on the coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regularizer {
    #[default]
    Zero,
    L1 {
        lambda: f64,
    },
}

impl Regularizer {
    pub fn value(&self, y: &DVector<f64>) -> f64 {
        match *self {
            Regularizer::Zero => 0.0,
            Regularizer::L1 { lambda } => lambda * y.lp_norm(1),
        }
    }

    /// `argmin_z s·h(z) + ½‖z − c‖²`.
    pub fn prox(&self, c: &DVector<f64>, s: f64) -> DVector<f64> {
        match *self {
            Regularizer::Zero => c.clone(),
            Regularizer::L1 { lambda } => {
                let t = s * lambda;
                c.map(|v| v.signum() * (v.abs() - t).max(0.0))
            }
        }
    }
}

impl fmt::Display for Regularizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regularizer::Zero => f.write_str("zero"),
            Regularizer::L1 { lambda } => write!(f, "l1({lambda})"),
        }
    }
}

/// Radial projection onto `{‖z‖² ≤ τ}`; `τ = ∞` is the identity.
pub fn project_ball(c: &DVector<f64>, tau: f64) -> DVector<f64> {
    let n2 = c.norm_squared();
    if n2 <= tau {
        c.clone()
    } else {
        c * (tau.sqrt() / n2.sqrt())
    }
}

/// `argmin_z h(z) + ι(‖z‖² ≤ τ) + ½‖z − c‖²`, computed as the prox of `h`
/// followed by the ball projection. This composition is exact for `h = 0`
/// and for the ℓ1 norm because the ball is centered at the origin.
pub fn prox_operator(reg: Regularizer, tau: f64, c: &DVector<f64>) -> DVector<f64> {
    project_ball(&reg.prox(c, 1.0), tau)
}

/// Local solver settings for the y-step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YStepPolicy {
    /// Target norm of the gradient mapping.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for YStepPolicy {
    fn default() -> Self {
        YStepPolicy {
            tol: 1e-10,
            max_iters: 100_000,
        }
    }
}

const STEP_FLOOR: f64 = 1e-12;

/// `argmin_{‖y‖²≤τ} ½‖Xy − z‖² + h(y) + (θ/2)‖y − y_prev‖²`.
///
/// With `h = 0` and a nonsingular Hessian the problem is solved exactly: the
/// unconstrained solution if feasible, otherwise the boundary point found by
/// bisection on the multiplier. A vanishing Hessian returns the projection
/// of `y_prev`. Everything else runs projected proximal gradient.
/// Returns the point and the number of inner iterations.
pub fn y_subproblem(
    x: &DMatrix<f64>,
    z: &DVector<f64>,
    y_prev: &DVector<f64>,
    theta: f64,
    reg: Regularizer,
    tau: f64,
    policy: YStepPolicy,
) -> Result<(DVector<f64>, usize), (usize, f64)> {
    let k = x.ncols();
    let mut h = x.tr_mul(x);
    for i in 0..k {
        h[(i, i)] += theta;
    }
    let g = x.tr_mul(z) + y_prev * theta;
    let eig = SymmetricEigen::new(h.clone());
    let lmax = eig.eigenvalues.max().max(0.0);
    let lmin = eig.eigenvalues.min();
    if lmax <= STEP_FLOOR {
        return Ok((project_ball(y_prev, tau), 0));
    }
    if reg == Regularizer::Zero && lmin > 1e-12 * lmax {
        let gh = eig.eigenvectors.tr_mul(&g);
        let at = |lam: f64| &eig.eigenvectors * gh.zip_map(&eig.eigenvalues, |a, l| a / (l + lam));
        let y0 = at(0.0);
        if y0.norm_squared() <= tau {
            return Ok((y0, 0));
        }
        let (mut lo, mut hi) = (0.0, g.norm() / tau.sqrt());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if at(mid).norm_squared() > tau {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-16 * hi {
                break;
            }
        }
        return Ok((project_ball(&at(hi), tau), 0));
    }
    let s = 1.0 / lmax.max(STEP_FLOOR);
    let mut y = project_ball(y_prev, tau);
    let mut mapping = f64::INFINITY;
    for it in 0..policy.max_iters {
        let grad = &h * &y - &g;
        let next = prox_operator_scaled(reg, tau, &(&y - grad * s), s);
        mapping = (&next - &y).norm() / s;
        y = next;
        if mapping <= policy.tol {
            return Ok((y, it + 1));
        }
    }
    Err((policy.max_iters, mapping))
}

fn prox_operator_scaled(reg: Regularizer, tau: f64, c: &DVector<f64>, s: f64) -> DVector<f64> {
    project_ball(&reg.prox(c, s), tau)
}

/// Problem data and graph of a distributed factorization instance.
#[derive(Debug, Clone)]
pub struct MfProblem {
    z: DMatrix<f64>,
    k: usize,
    gamma_reg: f64,
    tau: f64,
    regs: Vec<Regularizer>,
    graph: Graph,
    degrees: Vec<usize>,
    neighbors: Vec<Vec<usize>>,
    sigma_min: f64,
    norm_btb: f64,
}

impl MfProblem {
    /// `z` is `M×N` with one column per node.
    pub fn new(
        z: DMatrix<f64>,
        k: usize,
        gamma_reg: f64,
        tau: f64,
        regs: Vec<Regularizer>,
        graph: Graph,
    ) -> Result<Self, MfError> {
        graph.require_connected()?;
        if graph.n_edges() == 0 {
            return Err(GraphError::Empty.into());
        }
        let n = graph.n_nodes();
        if z.ncols() != n {
            return Err(MfError::Dimension {
                what: "columns of Z",
                expected: n,
                got: z.ncols(),
            });
        }
        if regs.len() != n {
            return Err(MfError::Dimension {
                what: "regularizers",
                expected: n,
                got: regs.len(),
            });
        }
        if k == 0 || z.nrows() == 0 {
            return Err(MfError::Invalid("dimensions must be positive".into()));
        }
        if !(gamma_reg > 0.0 && gamma_reg.is_finite()) {
            return Err(MfError::Invalid(format!("gamma_reg must be positive, got {gamma_reg}")));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(MfError::Invalid(format!("tau must be positive and finite, got {tau}")));
        }
        for r in &regs {
            if let Regularizer::L1 { lambda } = r {
                if !(*lambda >= 0.0 && lambda.is_finite()) {
                    return Err(MfError::Invalid(format!("l1 weight must be nonnegative, got {lambda}")));
                }
            }
        }
        let inc = incidence(&graph);
        let sigma_min =
            crate::graph::spectral_info(&inc.laplacian_signed, crate::graph::DEFAULT_TOL_ZERO)?.sigma_min_nonzero;
        let norm_btb = sym_max_eigenvalue(&inc.laplacian_signless);
        Ok(MfProblem {
            z,
            k,
            gamma_reg,
            tau,
            regs,
            degrees: graph.degrees(),
            neighbors: graph.neighbors(),
            graph,
            sigma_min,
            norm_btb,
        })
    }

    /// Random rank-`k` instance `Z = X★Y★` with `‖y★_i‖² ≤ τ/2`.
    /// Returns the problem together with `(X★, Y★)`.
    pub fn planted(
        m: usize,
        k: usize,
        graph: Graph,
        gamma_reg: f64,
        tau: f64,
        reg: Regularizer,
        seed: u64,
    ) -> Result<(Self, DMatrix<f64>, DMatrix<f64>), MfError> {
        let n = graph.n_nodes();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(m, k, |_, _| rng.gen_range(-1.0..1.0));
        let mut y = DMatrix::from_fn(k, n, |_, _| rng.gen_range(-1.0..1.0));
        for mut col in y.column_iter_mut() {
            let c = project_ball(&col.clone_owned(), 0.5 * tau);
            col.copy_from(&c);
        }
        let z = &x * &y;
        let p = MfProblem::new(z, k, gamma_reg, tau, vec![reg; n], graph)?;
        Ok((p, x, y))
    }

    pub fn z(&self) -> &DMatrix<f64> {
        &self.z
    }

    pub fn m(&self) -> usize {
        self.z.nrows()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_nodes(&self) -> usize {
        self.graph.n_nodes()
    }

    pub fn gamma_reg(&self) -> f64 {
        self.gamma_reg
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn regularizers(&self) -> &[Regularizer] {
        &self.regs
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// `σ_min(AᵀA)` of the scalar graph.
    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    /// `‖BᵀB‖` of the scalar graph.
    pub fn norm_btb(&self) -> f64 {
        self.norm_btb
    }

    pub fn conditions(&self, p: MfParams) -> MfConditionReport {
        mf_conditions(
            p.beta,
            p.c,
            p.d,
            self.tau,
            self.gamma_reg,
            self.sigma_min,
            self.norm_btb,
        )
    }

    /// Parameters from the suggestion rule with offset `nu`.
    pub fn suggest_params(&self, nu: f64) -> Result<MfParams, MfError> {
        Ok(mf_suggest(self.tau, self.gamma_reg, self.sigma_min, self.norm_btb, nu)?)
    }

    fn zcol(&self, i: usize) -> DVector<f64> {
        self.z.column(i).into_owned()
    }

    /// `(𝐀ᵀΩ)_i = Σ_{e=(i,j)} Ω_e − Σ_{e=(j,i)} Ω_e`, edges stored with the
    /// larger endpoint first.
    pub fn dual_block(&self, omega: &[DMatrix<f64>], i: usize) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.m(), self.k);
        for (e, &(a, b)) in self.graph.edges().iter().enumerate() {
            if a == i {
                g += &omega[e];
            } else if b == i {
                g -= &omega[e];
            }
        }
        g
    }

    fn neighbor_sum(&self, x: &[DMatrix<f64>], i: usize) -> DMatrix<f64> {
        let mut s = DMatrix::zeros(self.m(), self.k);
        for &j in &self.neighbors[i] {
            s += &x[j];
        }
        s
    }

    /// `(𝐀X)_e = X_i − X_j`.
    pub fn edge_differences(&self, x: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
        self.graph.edges().iter().map(|&(i, j)| &x[i] - &x[j]).collect()
    }

    /// `‖𝐀X‖²_F`.
    pub fn consensus_violation_sq(&self, x: &[DMatrix<f64>]) -> f64 {
        self.edge_differences(x).iter().map(|d| d.norm_squared()).sum()
    }

    /// `⟨𝐁ᵀ𝐁 D, D⟩ = Σ_e ‖D_i + D_j‖²_F`.
    pub fn signless_quad(&self, d: &[DMatrix<f64>]) -> f64 {
        self.graph
            .edges()
            .iter()
            .map(|&(i, j)| (&d[i] + &d[j]).norm_squared())
            .sum()
    }

    /// `(𝐁ᵀ𝐁 D)_i = d_i D_i + Σ_{j∈N(i)} D_j`.
    pub fn signless_apply(&self, d: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
        (0..self.n_nodes())
            .map(|i| &d[i] * self.degrees[i] as f64 + self.neighbor_sum(d, i))
            .collect()
    }

    /// `Σ_i ½‖X_i y_i − z_i‖² + γ‖X_i‖²_F` (smooth part).
    pub fn smooth_value(&self, x: &[DMatrix<f64>], y: &DMatrix<f64>) -> f64 {
        (0..self.n_nodes())
            .map(|i| {
                let r = &x[i] * y.column(i) - self.z.column(i);
                0.5 * r.norm_squared() + self.gamma_reg * x[i].norm_squared()
            })
            .sum()
    }

    /// `Σ_i h_i(y_i)`.
    pub fn penalty_value(&self, y: &DMatrix<f64>) -> f64 {
        (0..self.n_nodes())
            .map(|i| self.regs[i].value(&y.column(i).into_owned()))
            .sum()
    }

    /// `M_i = (X_i y_i − z_i) y_iᵀ + 2γX_i`.
    pub fn smooth_grad_x(&self, x: &[DMatrix<f64>], y: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        (0..self.n_nodes())
            .map(|i| {
                let yi = y.column(i);
                let r = &x[i] * yi - self.z.column(i);
                r * yi.transpose() + &x[i] * (2.0 * self.gamma_reg)
            })
            .collect()
    }

    /// Columns `X_iᵀ(X_i y_i − z_i)`.
    pub fn smooth_grad_y(&self, x: &[DMatrix<f64>], y: &DMatrix<f64>) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.k, self.n_nodes());
        for i in 0..self.n_nodes() {
            let r = &x[i] * y.column(i) - self.z.column(i);
            g.set_column(i, &x[i].tr_mul(&r));
        }
        g
    }

    /// `L_β(X, Y, Ω)`.
    pub fn lagrangian(&self, x: &[DMatrix<f64>], y: &DMatrix<f64>, omega: &[DMatrix<f64>], beta: f64) -> f64 {
        let ax = self.edge_differences(x);
        let inner: f64 = ax.iter().zip(omega).map(|(a, o)| a.dot(o)).sum();
        let pen: f64 = ax.iter().map(|a| a.norm_squared()).sum();
        self.smooth_value(x, y) + self.penalty_value(y) + inner + 0.5 * beta * pen
    }

    /// `∇_X L_β = M + 𝐀ᵀΩ + β𝐀ᵀ𝐀X`.
    pub fn lagrangian_grad_x(
        &self,
        x: &[DMatrix<f64>],
        y: &DMatrix<f64>,
        omega: &[DMatrix<f64>],
        beta: f64,
    ) -> Vec<DMatrix<f64>> {
        let m = self.smooth_grad_x(x, y);
        (0..self.n_nodes())
            .map(|i| {
                let lap = &x[i] * self.degrees[i] as f64 - self.neighbor_sum(x, i);
                &m[i] + self.dual_block(omega, i) + lap * beta
            })
            .collect()
    }

    /// `L_β + (cβ/2)(‖𝐀X‖² + ⟨𝐁ᵀ𝐁(X − X_prev), X − X_prev⟩)`.
    #[allow(clippy::too_many_arguments)]
    pub fn potential(
        &self,
        x: &[DMatrix<f64>],
        x_prev: &[DMatrix<f64>],
        y: &DMatrix<f64>,
        omega: &[DMatrix<f64>],
        beta: f64,
        c: f64,
    ) -> f64 {
        let dx: Vec<DMatrix<f64>> = x.iter().zip(x_prev).map(|(a, b)| a - b).collect();
        self.lagrangian(x, y, omega, beta) + 0.5 * c * beta * (self.consensus_violation_sq(x) + self.signless_quad(&dx))
    }

    /// `β‖𝐀X‖² + ‖∇_X L‖² + ‖Y − prox_{h+ι}[Y − ∇_Y(L − h)]‖²`.
    pub fn optimality_gap(&self, x: &[DMatrix<f64>], y: &DMatrix<f64>, omega: &[DMatrix<f64>], beta: f64) -> f64 {
        let z1: f64 = self
            .lagrangian_grad_x(x, y, omega, beta)
            .iter()
            .map(|g| g.norm_squared())
            .sum();
        let gy = self.smooth_grad_y(x, y);
        let mut z2 = 0.0;
        for i in 0..self.n_nodes() {
            let yi = y.column(i).into_owned();
            let p = prox_operator(self.regs[i], self.tau, &(&yi - gy.column(i)));
            z2 += (yi - p).norm_squared();
        }
        beta * self.consensus_violation_sq(x) + z1 + z2
    }
}

/// Iterate of the factorization method.
#[derive(Debug, Clone, PartialEq)]
pub struct MfState {
    /// `X_i`, each `M×K`.
    pub x: Vec<DMatrix<f64>>,
    /// `X_i` one round earlier.
    pub x_prev: Vec<DMatrix<f64>>,
    /// `K×N`, columns `y_i`.
    pub y: DMatrix<f64>,
    /// `Ω_e`, each `M×K`, in edge order.
    pub omega: Vec<DMatrix<f64>>,
    /// `θ_i` used by the last y-step.
    pub theta: DVector<f64>,
    pub r: usize,
}

impl MfState {
    /// Every node starts from `x0`, `y0` is projected onto the ball and the
    /// duals start at zero.
    pub fn consensus(problem: &MfProblem, x0: &DMatrix<f64>, y0: &DMatrix<f64>) -> Result<Self, MfError> {
        MfState::new(problem, vec![x0.clone(); problem.n_nodes()], y0)
    }

    pub fn new(problem: &MfProblem, x0: Vec<DMatrix<f64>>, y0: &DMatrix<f64>) -> Result<Self, MfError> {
        let (m, k, n) = (problem.m(), problem.k(), problem.n_nodes());
        if x0.len() != n {
            return Err(MfError::Dimension {
                what: "X blocks",
                expected: n,
                got: x0.len(),
            });
        }
        if let Some(b) = x0.iter().find(|b| b.shape() != (m, k)) {
            return Err(MfError::Dimension {
                what: "X block rows",
                expected: m,
                got: b.nrows(),
            });
        }
        if y0.shape() != (k, n) {
            return Err(MfError::Dimension {
                what: "Y columns",
                expected: n,
                got: y0.ncols(),
            });
        }
        let mut y = y0.clone();
        for mut col in y.column_iter_mut() {
            let p = project_ball(&col.clone_owned(), problem.tau());
            col.copy_from(&p);
        }
        Ok(MfState {
            x_prev: x0.clone(),
            x: x0,
            y,
            omega: vec![DMatrix::zeros(m, k); problem.graph().n_edges()],
            theta: DVector::zeros(n),
            r: 0,
        })
    }

    /// `max_{i,j} ‖X_i − X_j‖_F`.
    pub fn spread(&self) -> f64 {
        let mut s: f64 = 0.0;
        for i in 0..self.x.len() {
            for j in 0..i {
                s = s.max((&self.x[i] - &self.x[j]).norm());
            }
        }
        s
    }

    /// `max_i ‖y_i‖²`.
    pub fn max_y_norm_sq(&self) -> f64 {
        self.y.column_iter().map(|c| c.norm_squared()).fold(0.0, f64::max)
    }
}

/// `θ_i = ‖X_i y_i − z_i‖²`.
pub fn theta_update(state: &MfState, problem: &MfProblem) -> DVector<f64> {
    DVector::from_fn(problem.n_nodes(), |i, _| {
        (&state.x[i] * state.y.column(i) - problem.z().column(i)).norm_squared()
    })
}

/// All y-subproblems for the given `θ`.
pub fn y_step(
    state: &MfState,
    problem: &MfProblem,
    theta: &DVector<f64>,
    policy: YStepPolicy,
    exec: ExecMode,
) -> Result<DMatrix<f64>, MfError> {
    let cols = map_indexed(exec, problem.n_nodes(), |i| {
        y_subproblem(
            &state.x[i],
            &problem.zcol(i),
            &state.y.column(i).into_owned(),
            theta[i],
            problem.regs[i],
            problem.tau,
            policy,
        )
        .map(|(y, _)| y)
        .map_err(|(iters, residual)| MfError::InnerCap {
            node: i,
            iters,
            residual,
        })
    });
    let mut y = DMatrix::zeros(problem.k(), problem.n_nodes());
    for (i, c) in cols.into_iter().enumerate() {
        y.set_column(i, &c?);
    }
    Ok(y)
}

/// Per-node dictionary update
/// `X_i = (z_i y_iᵀ − (𝐀ᵀΩ)_i + β(d_i X_i + Σ_{j∈N(i)} X_j)) (y_i y_iᵀ + (2γ + 2βd_i)I)⁻¹`
/// with `X` and `Ω` from the current state and `y` the new coefficients.
pub fn x_step(state: &MfState, problem: &MfProblem, y: &DMatrix<f64>, beta: f64, exec: ExecMode) -> Vec<DMatrix<f64>> {
    let k = problem.k();
    map_indexed(exec, problem.n_nodes(), |i| {
        let yi = y.column(i);
        let d = problem.degrees[i] as f64;
        let rhs = problem.z().column(i) * yi.transpose() - problem.dual_block(&state.omega, i)
            + (&state.x[i] * d + problem.neighbor_sum(&state.x, i)) * beta;
        let mut g = yi * yi.transpose();
        for j in 0..k {
            g[(j, j)] += 2.0 * problem.gamma_reg + 2.0 * beta * d;
        }
        // g is symmetric positive definite
        let chol = g.cholesky().expect("X-step system is positive definite");
        chol.solve(&rhs.transpose()).transpose()
    })
}

/// `Ω_e + β(X_i − X_j)` for every edge `e = (i, j)`.
pub fn omega_step(omega: &[DMatrix<f64>], problem: &MfProblem, x: &[DMatrix<f64>], beta: f64) -> Vec<DMatrix<f64>> {
    problem
        .graph()
        .edges()
        .iter()
        .zip(omega)
        .map(|(&(i, j), o)| o + (&x[i] - &x[j]) * beta)
        .collect()
}

/// One full round `θ → y → X → Ω`.
pub fn mf_round(
    state: &MfState,
    problem: &MfProblem,
    beta: f64,
    policy: YStepPolicy,
    exec: ExecMode,
) -> Result<MfState, MfError> {
    let theta = theta_update(state, problem);
    let y = y_step(state, problem, &theta, policy, exec)?;
    let x = x_step(state, problem, &y, beta, exec);
    let omega = omega_step(&state.omega, problem, &x, beta);
    Ok(MfState {
        x_prev: state.x.clone(),
        x,
        y,
        omega,
        theta,
        r: state.r + 1,
    })
}

/// Output of [`run_mf`].
#[derive(Debug, Clone)]
pub struct MfRun {
    pub trace: ConvergenceTrace,
    pub final_state: MfState,
    /// Largest `‖y_i‖²` seen over the run.
    pub max_y_norm_sq: f64,
}

/// Runs rounds until `Q(X^{r+1}, Y^{r+1}, Ω^r) ≤ φ` or the round cap.
/// Rejects parameters that fail any of the four conditions.
pub fn run_mf(
    problem: &MfProblem,
    params: MfParams,
    stop: StopRule,
    init: MfState,
    exec: ExecMode,
) -> Result<MfRun, MfError> {
    run_mf_with(problem, params, stop, init, exec, |_, _, _| {})
}

/// [`run_mf`] with an observer called as `observer(prev, next, record)`.
pub fn run_mf_with<F>(
    problem: &MfProblem,
    params: MfParams,
    stop: StopRule,
    init: MfState,
    exec: ExecMode,
    mut observer: F,
) -> Result<MfRun, MfError>
where
    F: FnMut(&MfState, &MfState, &IterationRecord),
{
    let report = problem.conditions(params);
    if !report.passed() {
        return Err(MfError::Conditions {
            failed: report.failed(),
            residuals: report.residuals,
        });
    }
    let beta = params.beta;
    let mut trace = ConvergenceTrace {
        config_echo: vec![
            format!("m = {}", problem.m()),
            format!("k = {}", problem.k()),
            format!("n_nodes = {}", problem.n_nodes()),
            format!("gamma_reg = {}", problem.gamma_reg()),
            format!("tau = {}", problem.tau()),
            format!("beta = {}", params.beta),
            format!("c = {}", params.c),
            format!("d = {}", params.d),
            format!("phi = {}", stop.phi),
            format!("max_iters = {}", stop.max_iters),
        ],
        ..Default::default()
    };
    let policy = YStepPolicy::default();
    let mut state = init;
    let mut max_y = state.max_y_norm_sq();
    let mut termination = Termination::MaxIterations;
    for _ in 0..stop.max_iters {
        let next = mf_round(&state, problem, beta, policy, exec)?;
        let gap = problem.optimality_gap(&next.x, &next.y, &state.omega, beta);
        let dx: f64 = next.x.iter().zip(&state.x).map(|(a, b)| (a - b).norm_squared()).sum();
        let dw: f64 = next
            .omega
            .iter()
            .zip(&state.omega)
            .map(|(a, b)| (a - b).norm_squared())
            .sum();
        let rec = IterationRecord {
            r: state.r,
            beta_used: beta,
            aug_lagrangian: problem.lagrangian(&next.x, &next.y, &next.omega, beta),
            potential: problem.potential(&next.x, &state.x, &next.y, &next.omega, beta, params.c),
            gap_q: gap,
            constraint_violation: problem.consensus_violation_sq(&next.x).sqrt(),
            step_norm: dx.sqrt(),
            dual_step_norm: dw.sqrt(),
            inexact_residual: None,
        };
        observer(&state, &next, &rec);
        trace.records.push(rec);
        max_y = max_y.max(next.max_y_norm_sq());
        state = next;
        if gap <= stop.phi {
            termination = Termination::Converged { r: rec.r };
            break;
        }
    }
    trace.termination = Some(termination);
    Ok(MfRun {
        trace,
        final_state: state,
        max_y_norm_sq: max_y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_vec(x.to_vec())
    }

    #[test]
    fn prox_examples() {
        let c = v(&[2.0, -0.5]);
        assert_eq!(prox_operator(Regularizer::Zero, f64::INFINITY, &c), c);
        assert_eq!(
            prox_operator(Regularizer::L1 { lambda: 1.0 }, f64::INFINITY, &c),
            v(&[1.0, 0.0])
        );
        assert_eq!(prox_operator(Regularizer::Zero, 1.0, &v(&[2.0, 0.0])), v(&[1.0, 0.0]));
    }

    #[test]
    fn y_subproblem_examples() {
        let id = DMatrix::identity(2, 2);
        // l1 soft threshold, no proximal weight, no ball
        let (y, _) = y_subproblem(
            &id,
            &v(&[2.0, 0.0]),
            &v(&[0.0, 0.0]),
            0.0,
            Regularizer::L1 { lambda: 1.0 },
            f64::INFINITY,
            YStepPolicy::default(),
        )
        .unwrap();
        assert!((y - v(&[1.0, 0.0])).amax() < 1e-10);
        // degenerate objective returns the projected previous point
        let (y, _) = y_subproblem(
            &DMatrix::zeros(3, 2),
            &v(&[1.0, 2.0, 3.0]),
            &v(&[3.0, 4.0]),
            0.0,
            Regularizer::Zero,
            1.0,
            YStepPolicy::default(),
        )
        .unwrap();
        assert!((y - v(&[0.6, 0.8])).amax() < 1e-15);
        // interior unconstrained solution
        let (y, _) = y_subproblem(
            &id,
            &v(&[0.5, -0.2]),
            &v(&[1.0, 1.0]),
            1.0,
            Regularizer::Zero,
            100.0,
            YStepPolicy::default(),
        )
        .unwrap();
        assert!((y - v(&[0.75, 0.4])).amax() < 1e-14);
    }

    #[test]
    fn theta_examples() {
        let p = MfProblem::new(
            DMatrix::from_column_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            1,
            0.1,
            1.0,
            vec![Regularizer::Zero; 2],
            Graph::path(2).unwrap(),
        )
        .unwrap();
        let s = MfState::consensus(&p, &DMatrix::zeros(2, 1), &DMatrix::zeros(1, 2)).unwrap();
        assert_eq!(theta_update(&s, &p), v(&[1.0, 0.0]));
    }

    #[test]
    fn zero_data_x_step_stays_zero() {
        let p = MfProblem::new(
            DMatrix::zeros(2, 2),
            2,
            0.5,
            1.0,
            vec![Regularizer::Zero; 2],
            Graph::path(2).unwrap(),
        )
        .unwrap();
        let s = MfState::consensus(&p, &DMatrix::zeros(2, 2), &DMatrix::zeros(2, 2)).unwrap();
        let x = x_step(&s, &p, &s.y, 3.0, ExecMode::Sequential);
        assert!(x.iter().all(|b| b.amax() == 0.0));
    }

    #[test]
    fn omega_increment_example() {
        let p = MfProblem::new(
            DMatrix::zeros(2, 2),
            2,
            0.5,
            1.0,
            vec![Regularizer::Zero; 2],
            Graph::path(2).unwrap(),
        )
        .unwrap();
        let mut e11 = DMatrix::zeros(2, 2);
        e11[(0, 0)] = 1.0;
        // edge stored as (1, 0): increment is β(X_1 − X_0)
        let x = vec![DMatrix::zeros(2, 2), e11.clone()];
        let w = omega_step(&[DMatrix::zeros(2, 2)], &p, &x, 2.0);
        assert_eq!(w[0], e11 * 2.0);
        let same = vec![DMatrix::from_element(2, 2, 0.3); 2];
        assert_eq!(omega_step(&w, &p, &same, 2.0), w);
    }
}
