//! Proximal primal-dual iterations for `min f(x) s.t. Ax = b`.
//!
//! Every variant alternates a primal step on the proximally regularized
//! augmented Lagrangian
//!
//! ```text
//! x⁺ ≈ argmin f(x) + ⟨μ, Ax−b⟩ + (β/2)‖Ax−b‖² + (β/2)‖x−x^r‖²_{BᵀB}
//! ```
//!
//! with the dual ascent `μ⁺ = μ + β(Ax⁺ − b)`. The variants differ in how the
//! primal step is computed (exactly, with `f` linearized at `x^r`, or to a
//! prescribed accuracy) and whether `β` follows a schedule.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, LU};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{
    gap_q_from, lagrangian_gradient_from, potential_from_value, ConvergenceTrace, IterationRecord, Termination,
};
use crate::exec::{map_slice, ExecMode};
use crate::linalg::{sym_max_eigenvalue, sym_min_eigenvalue};
use crate::params::{ErrorSchedule, PenaltyParams, PenaltySchedule};
use crate::problem::{ConstraintSystem, SmoothObjective};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Exact proximal step.
    ProxPda,
    /// Objective linearized at `x^r`; one linear solve per step.
    ProxGpda,
    /// Proximal step solved to a scheduled accuracy.
    InProxPda,
    /// Exact proximal step with increasing penalty.
    ProxPdaIp,
    /// Linearized step with increasing penalty.
    ProxGpdaIp,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::ProxPda,
        Variant::ProxGpda,
        Variant::InProxPda,
        Variant::ProxPdaIp,
        Variant::ProxGpdaIp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::ProxPda => "prox_pda",
            Variant::ProxGpda => "prox_gpda",
            Variant::InProxPda => "in_prox_pda",
            Variant::ProxPdaIp => "prox_pda_ip",
            Variant::ProxGpdaIp => "prox_gpda_ip",
        }
    }

    pub fn is_increasing(self) -> bool {
        matches!(self, Variant::ProxPdaIp | Variant::ProxGpdaIp)
    }

    pub fn is_linearized(self) -> bool {
        matches!(self, Variant::ProxGpda | Variant::ProxGpdaIp)
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == norm || v.name().replace('_', "") == norm)
            .ok_or_else(|| format!("unknown variant {s:?}"))
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Fixed `(c, β)` or a penalty schedule with its potential coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Penalty {
    Fixed(PenaltyParams),
    Schedule { schedule: PenaltySchedule, c: f64 },
}

impl Penalty {
    /// Penalty in force after `r` steps (`β^r`).
    pub fn beta(&self, r: usize) -> f64 {
        match self {
            Penalty::Fixed(p) => p.beta,
            Penalty::Schedule { schedule, .. } => schedule.beta(r),
        }
    }

    pub fn c(&self) -> f64 {
        match self {
            Penalty::Fixed(p) => p.c,
            Penalty::Schedule { c, .. } => *c,
        }
    }
}

/// Inner solver tolerance for the proximal step: stop once the subproblem
/// gradient norm is at most `rel_tol·(1+‖x^r‖)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerPolicy {
    pub rel_tol: f64,
    pub max_iters: usize,
}

impl Default for InnerPolicy {
    fn default() -> Self {
        InnerPolicy {
            rel_tol: 1e-10,
            max_iters: 100_000,
        }
    }
}

/// Stop when `Q(x^{r+1}, μ^r) ≤ phi` or after `max_iters` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub phi: f64,
    pub max_iters: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            phi: 1e-8,
            max_iters: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub variant: Variant,
    pub penalty: Penalty,
    /// The matrix `BᵀB` of the proximal term.
    pub proximal: DMatrix<f64>,
    /// Accuracy schedule for [`Variant::InProxPda`] (defaults to exact).
    pub error_schedule: Option<ErrorSchedule>,
    pub inner: InnerPolicy,
    pub stop: StopRule,
    /// Initial primal point (zero when absent).
    pub x0: Option<DVector<f64>>,
    /// Initial dual point. Anything but zero breaks the column-space
    /// property of the dual iterates and is flagged in the trace.
    pub mu0: Option<DVector<f64>>,
    /// Optional extra proximal weight `W`, adding `½‖x−x^r‖²_W`.
    pub extra_proximal: Option<DMatrix<f64>>,
    /// Keep every `(x^r, μ^r)` in the run result.
    pub record_iterates: bool,
    pub exec: ExecMode,
}

impl SolverConfig {
    pub fn new(variant: Variant, penalty: Penalty, proximal: DMatrix<f64>) -> Self {
        SolverConfig {
            variant,
            penalty,
            proximal,
            error_schedule: None,
            inner: InnerPolicy::default(),
            stop: StopRule::default(),
            x0: None,
            mu0: None,
            extra_proximal: None,
            record_iterates: false,
            exec: ExecMode::default(),
        }
    }

    pub fn with_stop(mut self, phi: f64, max_iters: usize) -> Self {
        self.stop = StopRule { phi, max_iters };
        self
    }

    pub fn with_x0(mut self, x0: DVector<f64>) -> Self {
        self.x0 = Some(x0);
        self
    }

    pub fn with_error_schedule(mut self, e: ErrorSchedule) -> Self {
        self.error_schedule = Some(e);
        self
    }

    pub fn with_iterates(mut self) -> Self {
        self.record_iterates = true;
        self
    }

    /// `key = value` lines describing this configuration.
    pub fn echo(&self) -> Vec<String> {
        let mut out = vec![format!("variant = {}", self.variant)];
        match self.penalty {
            Penalty::Fixed(p) => {
                out.push(format!("beta = {}", p.beta));
                out.push(format!("c = {}", p.c));
            }
            Penalty::Schedule { schedule, c } => {
                match schedule {
                    PenaltySchedule::Power { beta0, alpha } => {
                        out.push(format!("schedule = power(beta0 = {beta0}, alpha = {alpha})"))
                    }
                    PenaltySchedule::Constant { beta } => out.push(format!("schedule = constant(beta = {beta})")),
                }
                out.push(format!("c = {c}"));
            }
        }
        if let Some(e) = self.error_schedule {
            out.push(format!("error_schedule = eps0 {} p {}", e.eps0, e.p));
        }
        out.push(format!("phi = {}", self.stop.phi));
        out.push(format!("max_iters = {}", self.stop.max_iters));
        out
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("AᵀA + BᵀB − I has eigenvalue {0:.3e} < 0")]
    ProximalTooWeak(f64),
    #[error("increasing-penalty variants need BᵀB ≻ 0 and ‖BᵀB‖ > 1 (λmin {min:.3e}, λmax {max:.3e})")]
    ProximalNotDefinite { min: f64, max: f64 },
    #[error("penalty β = {beta} must exceed the Lipschitz constant L = {l} for a nonconvex objective")]
    PenaltyTooSmall { beta: f64, l: f64 },
    #[error("{0}")]
    Config(String),
    #[error("inner solver stopped after {iters} iterations with residual {residual:.3e} (target {target:.3e})")]
    InnerCapExceeded { iters: usize, residual: f64, target: f64 },
    #[error("singular primal system")]
    Singular,
}

/// Iterate `(x^r, x^{r−1}, μ^r)` with the penalty `β^r` currently in force.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub x: DVector<f64>,
    pub x_prev: DVector<f64>,
    pub mu: DVector<f64>,
    pub r: usize,
    pub beta_current: f64,
    /// `∇f(x)`.
    pub grad: DVector<f64>,
}

/// Result of one primal-dual step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub next: SolverState,
    pub beta_used: f64,
    /// Subproblem gradient at the returned point.
    pub residual: DVector<f64>,
    pub inner_iterations: usize,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub trace: ConvergenceTrace,
    pub final_state: SolverState,
    /// `(x^r, μ^r)` for `r = 0..=len` when requested.
    pub iterates: Option<Vec<(DVector<f64>, DVector<f64>)>>,
    /// Realized subproblem residual vectors, when iterates are recorded.
    pub residuals: Option<Vec<DVector<f64>>>,
}

enum Factor {
    Chol(Cholesky<f64, Dyn>),
    Lu(LU<f64, Dyn, Dyn>),
}

impl Factor {
    fn new(m: DMatrix<f64>) -> Result<Self, SolverError> {
        match m.clone().cholesky() {
            Some(c) => Ok(Factor::Chol(c)),
            None => {
                let lu = m.lu();
                if lu.is_invertible() {
                    Ok(Factor::Lu(lu))
                } else {
                    Err(SolverError::Singular)
                }
            }
        }
    }

    fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>, SolverError> {
        match self {
            Factor::Chol(c) => Ok(c.solve(rhs)),
            Factor::Lu(l) => l.solve(rhs).ok_or(SolverError::Singular),
        }
    }
}

/// A validated solver bound to one problem instance.
pub struct Solver<'a> {
    f: &'a dyn SmoothObjective,
    cs: &'a ConstraintSystem,
    cfg: SolverConfig,
    /// `AᵀA + BᵀB`.
    g: DMatrix<f64>,
    atb: DVector<f64>,
    quad: Option<(DMatrix<f64>, DVector<f64>)>,
    lam_g: f64,
    lam_w: f64,
    factor: Option<(f64, bool, Factor)>,
    norm_btb: f64,
}

impl<'a> Solver<'a> {
    pub fn new(f: &'a dyn SmoothObjective, cs: &'a ConstraintSystem, cfg: SolverConfig) -> Result<Self, SolverError> {
        let n = cs.n_vars();
        let dim = |what, m: &DMatrix<f64>| {
            if m.nrows() != n || m.ncols() != n {
                Err(SolverError::Dimension {
                    what,
                    expected: n,
                    got: m.nrows(),
                })
            } else {
                Ok(())
            }
        };
        if f.dim() != n {
            return Err(SolverError::Dimension {
                what: "objective",
                expected: n,
                got: f.dim(),
            });
        }
        dim("proximal matrix", &cfg.proximal)?;
        if let Some(w) = &cfg.extra_proximal {
            dim("extra proximal matrix", w)?;
        }
        if let Some(x0) = &cfg.x0 {
            if x0.len() != n {
                return Err(SolverError::Dimension {
                    what: "x0",
                    expected: n,
                    got: x0.len(),
                });
            }
        }
        if let Some(mu0) = &cfg.mu0 {
            if mu0.len() != cs.n_rows() {
                return Err(SolverError::Dimension {
                    what: "mu0",
                    expected: cs.n_rows(),
                    got: mu0.len(),
                });
            }
        }
        let btb = (&cfg.proximal + cfg.proximal.transpose()) * 0.5;
        let g = cs.ata() + &btb;
        let lam_min = sym_min_eigenvalue(&(&g - DMatrix::identity(n, n)));
        if lam_min < -1e-9 {
            return Err(SolverError::ProximalTooWeak(lam_min));
        }
        let norm_btb = sym_max_eigenvalue(&btb);
        match (cfg.variant.is_increasing(), &cfg.penalty) {
            (true, Penalty::Fixed(_)) => {
                return Err(SolverError::Config(
                    "increasing-penalty variants need a penalty schedule".into(),
                ))
            }
            (false, Penalty::Schedule { .. }) => {
                return Err(SolverError::Config(
                    "fixed-penalty variants need fixed (c, beta)".into(),
                ))
            }
            _ => {}
        }
        if cfg.variant.is_increasing() {
            let min = sym_min_eigenvalue(&btb);
            if !(min > 1e-12) || !(norm_btb > 1.0) {
                return Err(SolverError::ProximalNotDefinite { min, max: norm_btb });
            }
        }
        let first_beta = cfg.penalty.beta(if cfg.variant.is_increasing() { 1 } else { 0 });
        if !(first_beta > 0.0) {
            return Err(SolverError::Config(format!(
                "penalty must be positive, got {first_beta}"
            )));
        }
        if !cfg.variant.is_linearized() && !f.is_convex() && first_beta <= f.lipschitz() {
            return Err(SolverError::PenaltyTooSmall {
                beta: first_beta,
                l: f.lipschitz(),
            });
        }
        if cfg.variant != Variant::InProxPda && cfg.error_schedule.is_some_and(|e| !e.is_exact()) {
            return Err(SolverError::Config(
                "an error schedule only applies to the inexact variant".into(),
            ));
        }
        let lam_g = sym_max_eigenvalue(&g);
        let lam_w = cfg.extra_proximal.as_ref().map(sym_max_eigenvalue).unwrap_or(0.0);
        let mut cfg = cfg;
        cfg.proximal = btb;
        Ok(Solver {
            f,
            cs,
            g,
            atb: cs.a().tr_mul(cs.b()),
            quad: f.quadratic_form(),
            lam_g,
            lam_w,
            factor: None,
            norm_btb,
            cfg,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Largest eigenvalue of the (symmetrized) `BᵀB`.
    pub fn norm_btb(&self) -> f64 {
        self.norm_btb
    }

    pub fn initial_state(&self) -> SolverState {
        let n = self.cs.n_vars();
        let x = self.cfg.x0.clone().unwrap_or_else(|| DVector::zeros(n));
        let mu = self.cfg.mu0.clone().unwrap_or_else(|| DVector::zeros(self.cs.n_rows()));
        SolverState {
            grad: self.f.gradient(&x),
            x_prev: x.clone(),
            x,
            mu,
            r: 0,
            beta_current: self.cfg.penalty.beta(0),
        }
    }

    fn system_matrix(&self, beta: f64, with_hessian: bool) -> DMatrix<f64> {
        let mut m = &self.g * beta;
        if let Some(w) = &self.cfg.extra_proximal {
            m += w;
        }
        if with_hessian {
            if let Some((h, _)) = &self.quad {
                m += h;
            }
        }
        m
    }

    fn factor_for(&mut self, beta: f64, with_hessian: bool) -> Result<&Factor, SolverError> {
        let stale = !matches!(&self.factor, Some((b, h, _)) if *b == beta && *h == with_hessian);
        if stale {
            let m = self.system_matrix(beta, with_hessian);
            self.factor = Some((beta, with_hessian, Factor::new(m)?));
        }
        Ok(&self.factor.as_ref().unwrap().2)
    }

    /// `βBᵀBx^r + Wx^r − Aᵀμ + βAᵀb`, the part of every primal right-hand
    /// side that does not involve `f`.
    fn base_rhs(&self, x_r: &DVector<f64>, mu: &DVector<f64>, beta: f64) -> DVector<f64> {
        let mut rhs = &self.cfg.proximal * x_r * beta - self.cs.a().tr_mul(mu) + &self.atb * beta;
        if let Some(w) = &self.cfg.extra_proximal {
            rhs += w * x_r;
        }
        rhs
    }

    /// Gradient of the proximal subproblem at `x`:
    /// `∇f(x) + Aᵀμ + βAᵀ(Ax−b) + βBᵀB(x−x^r) + W(x−x^r)`.
    fn subproblem_gradient(
        &self,
        grad_f: &DVector<f64>,
        x: &DVector<f64>,
        x_r: &DVector<f64>,
        mu: &DVector<f64>,
        beta: f64,
    ) -> DVector<f64> {
        let dx = x - x_r;
        let mut g = lagrangian_gradient_from(grad_f, self.cs, x, mu, beta) + &self.cfg.proximal * &dx * beta;
        if let Some(w) = &self.cfg.extra_proximal {
            g += w * &dx;
        }
        g
    }

    /// Approximately minimizes the proximal subproblem until its gradient
    /// norm is at most `tol`; quadratic objectives are solved exactly.
    /// Returns `(x, ∇f(x), subproblem gradient, inner iterations)`.
    pub fn solve_x_subproblem(
        &mut self,
        x_r: &DVector<f64>,
        mu: &DVector<f64>,
        beta: f64,
        tol: f64,
    ) -> Result<(DVector<f64>, DVector<f64>, DVector<f64>, usize), SolverError> {
        if !self.f.is_convex() && beta <= self.f.lipschitz() {
            return Err(SolverError::PenaltyTooSmall {
                beta,
                l: self.f.lipschitz(),
            });
        }
        let base = self.base_rhs(x_r, mu, beta);
        if let Some((_, g)) = self.quad.clone() {
            let rhs = base - g;
            let x = self.factor_for(beta, true)?.solve(&rhs)?;
            let grad = self.f.gradient(&x);
            let res = self.subproblem_gradient(&grad, &x, x_r, mu, beta);
            return Ok((x, grad, res, 0));
        }
        // warm start from the linearized step
        let grad_r = self.f.gradient(x_r);
        let mut x = self.factor_for(beta, false)?.solve(&(&base - &grad_r))?;
        let step = 1.0 / (self.f.lipschitz() + beta * self.lam_g + self.lam_w);
        let mut best: Option<(f64, usize)> = None;
        for it in 0..=self.cfg.inner.max_iters {
            let grad = self.f.gradient(&x);
            let res = self.subproblem_gradient(&grad, &x, x_r, mu, beta);
            let rn = res.norm();
            if rn <= tol {
                return Ok((x, grad, res, it));
            }
            best = Some(best.map_or((rn, it), |(b, i)| if rn < b { (rn, it) } else { (b, i) }));
            x -= res * step;
        }
        Err(SolverError::InnerCapExceeded {
            iters: self.cfg.inner.max_iters,
            residual: best.map_or(f64::INFINITY, |b| b.0),
            target: tol,
        })
    }

    fn exact_tol(&self, x_r: &DVector<f64>) -> f64 {
        self.cfg.inner.rel_tol * (1.0 + x_r.norm())
    }

    /// One primal-dual step from `state`.
    pub fn step(&mut self, state: &SolverState) -> Result<StepOutcome, SolverError> {
        let variant = self.cfg.variant;
        let beta = if variant.is_increasing() {
            self.cfg.penalty.beta(state.r + 1)
        } else {
            self.cfg.penalty.beta(state.r)
        };
        let (x, grad, residual, inner) = if variant.is_linearized() {
            let rhs = self.base_rhs(&state.x, &state.mu, beta) - &state.grad;
            let x = self.factor_for(beta, false)?.solve(&rhs)?;
            let grad = self.f.gradient(&x);
            // residual of the linearized optimality condition
            let residual = self.subproblem_gradient(&state.grad, &x, &state.x, &state.mu, beta);
            (x, grad, residual, 0)
        } else {
            let tol = match (variant, self.cfg.error_schedule) {
                (Variant::InProxPda, Some(e)) if !e.is_exact() => e.eps(state.r + 1),
                _ => self.exact_tol(&state.x),
            };
            self.solve_x_subproblem(&state.x, &state.mu, beta, tol)?
        };
        let mu = &state.mu + self.cs.residual(&x) * beta;
        Ok(StepOutcome {
            next: SolverState {
                x_prev: state.x.clone(),
                x,
                mu,
                r: state.r + 1,
                beta_current: beta,
                grad,
            },
            beta_used: beta,
            residual,
            inner_iterations: inner,
        })
    }

    fn record(&self, prev: &SolverState, out: &StepOutcome) -> IterationRecord {
        let next = &out.next;
        let beta = out.beta_used;
        let lb = self.f.lower_bound();
        let shift = if lb.is_finite() { lb } else { 0.0 };
        let fx = self.f.value(&next.x) - shift;
        let coef_beta = if self.cfg.variant.is_increasing() {
            beta * prev.beta_current
        } else {
            beta
        };
        let c = self.cfg.penalty.c();
        let potential = potential_from_value(
            fx,
            self.cs,
            &next.x,
            &prev.x,
            &next.mu,
            c,
            beta,
            coef_beta,
            &self.cfg.proximal,
        );
        let aug = potential_from_value(
            fx,
            self.cs,
            &next.x,
            &prev.x,
            &next.mu,
            0.0,
            beta,
            0.0,
            &self.cfg.proximal,
        );
        let violation = self.cs.violation(&next.x);
        IterationRecord {
            r: prev.r,
            beta_used: beta,
            aug_lagrangian: aug,
            potential,
            gap_q: gap_q_from(&next.grad, self.cs, &next.x, &prev.mu, beta),
            constraint_violation: violation,
            step_norm: (&next.x - &prev.x).norm(),
            dual_step_norm: (&next.mu - &prev.mu).norm(),
            inexact_residual: (self.cfg.variant == Variant::InProxPda).then(|| out.residual.norm()),
        }
    }

    /// Runs to the stopping rule, calling `observer(prev, outcome, record)`
    /// after every step.
    pub fn run_with<F>(&mut self, mut observer: F) -> Result<RunResult, SolverError>
    where
        F: FnMut(&SolverState, &StepOutcome, &IterationRecord),
    {
        let mut state = self.initial_state();
        let mut trace = ConvergenceTrace {
            config_echo: self.cfg.echo(),
            ..Default::default()
        };
        if state.mu.iter().any(|v| *v != 0.0) {
            trace
                .notes
                .push("initial dual is nonzero; column-space property of the duals not guaranteed".into());
        }
        let keep = self.cfg.record_iterates;
        let mut iterates = keep.then(|| vec![(state.x.clone(), state.mu.clone())]);
        let mut residuals = keep.then(Vec::new);
        let stop = self.cfg.stop;
        let mut termination = Termination::MaxIterations;
        for _ in 0..stop.max_iters {
            let out = self.step(&state)?;
            let rec = self.record(&state, &out);
            observer(&state, &out, &rec);
            trace.records.push(rec);
            if let Some(it) = iterates.as_mut() {
                it.push((out.next.x.clone(), out.next.mu.clone()));
            }
            if let Some(rs) = residuals.as_mut() {
                rs.push(out.residual.clone());
            }
            state = out.next;
            if rec.gap_q <= stop.phi {
                termination = Termination::Converged { r: rec.r };
                break;
            }
        }
        trace.termination = Some(termination);
        Ok(RunResult {
            trace,
            final_state: state,
            iterates,
            residuals,
        })
    }

    pub fn run(&mut self) -> Result<RunResult, SolverError> {
        self.run_with(|_, _, _| {})
    }
}

/// One independent problem instance for [`run_batch`].
pub struct BatchJob<'a> {
    pub f: &'a dyn SmoothObjective,
    pub cs: &'a ConstraintSystem,
    pub config: SolverConfig,
}

/// Runs independent instances, in parallel when `exec` allows.
pub fn run_batch(jobs: &[BatchJob<'_>], exec: ExecMode) -> Vec<Result<RunResult, SolverError>> {
    map_slice(exec, jobs, |job| Solver::new(job.f, job.cs, job.config.clone())?.run())
}
