//! Merit functions, optimality measures, traces and descent audits.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problem::{ConstraintSystem, SmoothObjective};

/// Absolute slack used by every inequality audit.
pub const AUDIT_SLACK: f64 = 1e-8;

/// Column order of the trace CSV.
pub const CSV_COLUMNS: [&str; 9] = [
    "r",
    "beta",
    "aug_lagrangian",
    "potential",
    "gap_q",
    "constraint_violation",
    "step_norm",
    "dual_step_norm",
    "inexact_residual",
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("trace too short: need at least {need} records, have {have}")]
    ShortTrace { need: usize, have: usize },
}

fn weighted_sq(m: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    v.dot(&(m * v))
}

/// `f(x) + ⟨μ, Ax−b⟩ + (β/2)‖Ax−b‖²`.
pub fn augmented_lagrangian(
    f: &dyn SmoothObjective,
    cs: &ConstraintSystem,
    x: &DVector<f64>,
    mu: &DVector<f64>,
    beta: f64,
) -> f64 {
    aug_from_value(f.value(x), cs, x, mu, beta)
}

fn aug_from_value(fx: f64, cs: &ConstraintSystem, x: &DVector<f64>, mu: &DVector<f64>, beta: f64) -> f64 {
    let r = cs.residual(x);
    fx + mu.dot(&r) + 0.5 * beta * r.norm_squared()
}

/// `L_β(x, μ) + (cβ/2)(‖Ax−b‖² + ‖x − x_prev‖²_{BᵀB})`.
#[allow(clippy::too_many_arguments)]
pub fn potential(
    f: &dyn SmoothObjective,
    cs: &ConstraintSystem,
    x: &DVector<f64>,
    x_prev: &DVector<f64>,
    mu: &DVector<f64>,
    c: f64,
    beta: f64,
    btb: &DMatrix<f64>,
) -> f64 {
    potential_from_value(f.value(x), cs, x, x_prev, mu, c, beta, beta, btb)
}

/// Increasing-penalty potential
/// `L_{β⁺}(x, μ) + (cβ⁺β/2)(‖Ax−b‖² + ‖x − x_prev‖²_{BᵀB})`.
#[allow(clippy::too_many_arguments)]
pub fn potential_ip(
    f: &dyn SmoothObjective,
    cs: &ConstraintSystem,
    x: &DVector<f64>,
    x_prev: &DVector<f64>,
    mu: &DVector<f64>,
    c: f64,
    beta_next: f64,
    beta_cur: f64,
    btb: &DMatrix<f64>,
) -> f64 {
    let fx = f.value(x);
    let r = cs.residual(x);
    let dx = x - x_prev;
    aug_from_value(fx, cs, x, mu, beta_next)
        + 0.5 * c * beta_next * beta_cur * (r.norm_squared() + weighted_sq(btb, &dx))
}

/// Shared body of both potentials: with `coef_beta = β` this is the fixed
/// penalty potential; the increasing-penalty one passes `β⁺β` through
/// [`potential_ip`].
#[allow(clippy::too_many_arguments)]
pub(crate) fn potential_from_value(
    fx: f64,
    cs: &ConstraintSystem,
    x: &DVector<f64>,
    x_prev: &DVector<f64>,
    mu: &DVector<f64>,
    c: f64,
    beta: f64,
    coef_beta: f64,
    btb: &DMatrix<f64>,
) -> f64 {
    let r = cs.residual(x);
    let dx = x - x_prev;
    aug_from_value(fx, cs, x, mu, beta) + 0.5 * c * coef_beta * (r.norm_squared() + weighted_sq(btb, &dx))
}

/// `∇f(x) + Aᵀμ + βAᵀ(Ax−b)`.
pub fn lagrangian_gradient(
    f: &dyn SmoothObjective,
    cs: &ConstraintSystem,
    x: &DVector<f64>,
    mu: &DVector<f64>,
    beta: f64,
) -> DVector<f64> {
    lagrangian_gradient_from(&f.gradient(x), cs, x, mu, beta)
}

pub(crate) fn lagrangian_gradient_from(
    grad: &DVector<f64>,
    cs: &ConstraintSystem,
    x: &DVector<f64>,
    mu: &DVector<f64>,
    beta: f64,
) -> DVector<f64> {
    let r = cs.residual(x);
    grad + cs.a().tr_mul(&(mu + r * beta))
}

/// `‖∇_x L_β(x, μ)‖² + ‖Ax−b‖²`.
pub fn optimality_gap_q(
    f: &dyn SmoothObjective,
    cs: &ConstraintSystem,
    x: &DVector<f64>,
    mu: &DVector<f64>,
    beta: f64,
) -> f64 {
    gap_q_from(&f.gradient(x), cs, x, mu, beta)
}

pub(crate) fn gap_q_from(
    grad: &DVector<f64>,
    cs: &ConstraintSystem,
    x: &DVector<f64>,
    mu: &DVector<f64>,
    beta: f64,
) -> f64 {
    lagrangian_gradient_from(grad, cs, x, mu, beta).norm_squared() + cs.residual(x).norm_squared()
}

/// `(‖∇f(x) + Aᵀμ‖, ‖Ax−b‖)`.
pub fn stationarity_residual(
    f: &dyn SmoothObjective,
    cs: &ConstraintSystem,
    x: &DVector<f64>,
    mu: &DVector<f64>,
) -> (f64, f64) {
    let g = f.gradient(x) + cs.a().tr_mul(mu);
    (g.norm(), cs.violation(x))
}

/// One row of a convergence trace, describing the step `r → r+1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub r: usize,
    /// Penalty used in the step (`β` or `β^{r+1}`).
    pub beta_used: f64,
    /// `L_β(x^{r+1}, μ^{r+1})` with the objective shifted by its lower bound.
    pub aug_lagrangian: f64,
    /// Potential at `(x^{r+1}, x^r, μ^{r+1})`, same shift.
    pub potential: f64,
    /// `Q(x^{r+1}, μ^r)`.
    pub gap_q: f64,
    /// `‖Ax^{r+1} − b‖`.
    pub constraint_violation: f64,
    /// `‖x^{r+1} − x^r‖`.
    pub step_norm: f64,
    /// `‖μ^{r+1} − μ^r‖`.
    pub dual_step_norm: f64,
    /// Norm of the realized subproblem residual, for inexact steps.
    pub inexact_residual: Option<f64>,
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Termination {
    /// `Q ≤ φ` first held at the record with this counter.
    Converged {
        r: usize,
    },
    MaxIterations,
}

/// Ordered records of a run plus its termination reason.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub records: Vec<IterationRecord>,
    pub termination: Option<Termination>,
    /// Free-form `key = value` lines describing the configuration.
    pub config_echo: Vec<String>,
    /// Warnings raised while running (e.g. a user-supplied nonzero initial
    /// dual).
    pub notes: Vec<String>,
}

impl ConvergenceTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn converged(&self) -> bool {
        matches!(self.termination, Some(Termination::Converged { .. }))
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.gap_q).collect()
    }

    pub fn potentials(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.potential).collect()
    }

    /// First record counter with `Q ≤ φ`.
    pub fn first_passage(&self, phi: f64) -> Option<usize> {
        self.records.iter().find(|r| r.gap_q <= phi).map(|r| r.r)
    }

    /// CSV with `# ` header lines echoing the configuration.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for line in &self.config_echo {
            let _ = writeln!(s, "# {line}");
        }
        s.push_str(&CSV_COLUMNS.join(","));
        s.push('\n');
        for rec in &self.records {
            let inexact = rec.inexact_residual.map(|v| format!("{v:e}")).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}",
                rec.r,
                rec.beta_used,
                rec.aug_lagrangian,
                rec.potential,
                rec.gap_q,
                rec.constraint_violation,
                rec.step_norm,
                rec.dual_step_norm,
                inexact
            );
        }
        s
    }
}

/// Empirical sublinear-rate constant and descent onset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateCertificate {
    /// `max_{2≤T≤len} (T−1)·min_{r≤T} Q_r`.
    pub nu_hat: f64,
    /// Smallest index after which the potential never increases (1e-12
    /// relative slack).
    pub monotone_from: usize,
}

/// `ν̂` over a gap sequence whose first entry is `r = 1`.
pub fn nu_hat(gaps: &[f64]) -> f64 {
    let mut running_min = f64::INFINITY;
    let mut nu: f64 = 0.0;
    for (k, g) in gaps.iter().enumerate() {
        running_min = running_min.min(*g);
        let t = k + 1;
        if t >= 2 {
            nu = nu.max((t - 1) as f64 * running_min);
        }
    }
    nu
}

fn increases(prev: f64, next: f64, rel: f64) -> bool {
    next > prev + rel * prev.abs().max(1.0)
}

/// Smallest `k` such that `P[j+1] ≤ P[j]` (relative slack `rel`) for all
/// `j ≥ k`.
pub fn monotone_from(values: &[f64], rel: f64) -> usize {
    let mut k = 0;
    for j in 0..values.len().saturating_sub(1) {
        if increases(values[j], values[j + 1], rel) {
            k = j + 1;
        }
    }
    k
}

/// First index `t` such that the sequence is nonincreasing over the next
/// `window` steps, or `None`.
pub fn burn_in(values: &[f64], window: usize, rel: f64) -> Option<usize> {
    let mut run = 0;
    for j in 0..values.len().saturating_sub(1) {
        if increases(values[j], values[j + 1], rel) {
            run = 0;
        } else {
            run += 1;
            if run >= window {
                return Some(j + 1 - window);
            }
        }
    }
    None
}

pub fn rate_certificate(trace: &ConvergenceTrace) -> Result<RateCertificate, DiagnosticsError> {
    if trace.len() < 3 {
        return Err(DiagnosticsError::ShortTrace {
            need: 3,
            have: trace.len(),
        });
    }
    Ok(RateCertificate {
        nu_hat: nu_hat(&trace.gaps()),
        monotone_from: monotone_from(&trace.potentials(), 1e-12),
    })
}

/// Outcome of checking an inequality `lhs ≤ rhs + slack` along a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityAudit {
    pub checked: usize,
    pub violations: usize,
    /// `min (rhs − lhs)` over checked iterations.
    pub worst_margin: f64,
}

impl InequalityAudit {
    fn new() -> Self {
        InequalityAudit {
            checked: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
        }
    }

    fn check(&mut self, lhs: f64, rhs: f64, slack: f64) {
        self.checked += 1;
        let m = rhs - lhs;
        self.worst_margin = self.worst_margin.min(m);
        if m < -slack {
            self.violations += 1;
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Spectral and smoothness constants entering the per-iteration bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditConstants {
    pub l: f64,
    pub sigma_min: f64,
    pub norm_btb: f64,
    pub beta: f64,
    pub c: f64,
}

/// Dual-difference bound along a fixed-penalty exact run:
/// `(1/β)‖μ^{r+1}−μ^r‖² ≤ (2L²/(βσ))‖x^{r+1}−x^r‖² +
/// (2β/σ)‖BᵀB((x^{r+1}−x^r)−(x^r−x^{r−1}))‖²`.
///
/// `xs[k]` and `mus[k]` are `x^k`, `μ^k`; checked for `r ≥ 1`.
pub fn audit_dual_bound(
    xs: &[DVector<f64>],
    mus: &[DVector<f64>],
    btb: &DMatrix<f64>,
    k: AuditConstants,
    slack: f64,
) -> InequalityAudit {
    let mut audit = InequalityAudit::new();
    for r in 1..xs.len().saturating_sub(1) {
        let dx = &xs[r + 1] - &xs[r];
        let ddx = &dx - (&xs[r] - &xs[r - 1]);
        let lhs = (&mus[r + 1] - &mus[r]).norm_squared() / k.beta;
        let rhs = 2.0 * k.l * k.l / (k.beta * k.sigma_min) * dx.norm_squared()
            + 2.0 * k.beta / k.sigma_min * (btb * ddx).norm_squared();
        audit.check(lhs, rhs, slack);
    }
    audit
}

/// Key bound on the constraint-violation-plus-proximal object:
/// `(β/2)(‖Ax^{r+1}−b‖² + ‖Δ^{r+1}‖²_{BᵀB}) ≤ L‖Δ^{r+1}‖² +
/// (β/2)(‖Δ^r‖²_{BᵀB} + ‖Ax^r−b‖²) − (β/2)(‖Δ^r−Δ^{r+1}‖²_{BᵀB} + ‖AΔ^{r+1}‖²)`.
pub fn audit_key_bound(
    cs: &ConstraintSystem,
    xs: &[DVector<f64>],
    btb: &DMatrix<f64>,
    k: AuditConstants,
    slack: f64,
) -> InequalityAudit {
    let mut audit = InequalityAudit::new();
    let b = k.beta;
    for r in 1..xs.len().saturating_sub(1) {
        let d1 = &xs[r + 1] - &xs[r];
        let d0 = &xs[r] - &xs[r - 1];
        let lhs = 0.5 * b * (cs.residual(&xs[r + 1]).norm_squared() + weighted_sq(btb, &d1));
        let rhs = k.l * d1.norm_squared() + 0.5 * b * (weighted_sq(btb, &d0) + cs.residual(&xs[r]).norm_squared())
            - 0.5 * b * (weighted_sq(btb, &(&d0 - &d1)) + (cs.a() * &d1).norm_squared());
        audit.check(lhs, rhs, slack);
    }
    audit
}

/// Per-iteration potential decrease:
/// `P^r − P^{r+1} ≥ ((β−L)/2 − 2L²/(βσ) − cL)‖Δ^{r+1}‖² +
/// (cβ/2 − 2β‖BᵀB‖/σ)‖Δ^{r+1}−Δ^r‖²_{BᵀB}`.
///
/// `potentials[k]` is the potential at `(x^{k+1}, x^k, μ^{k+1})`, i.e. one
/// entry per trace record; checked for `r ≥ 1`.
pub fn audit_potential_descent(
    potentials: &[f64],
    xs: &[DVector<f64>],
    btb: &DMatrix<f64>,
    k: AuditConstants,
    slack: f64,
) -> InequalityAudit {
    let c1 = crate::params::descent_coefficient_step(k.c, k.beta, k.l, k.sigma_min);
    let c2 = crate::params::descent_coefficient_curvature(k.c, k.beta, k.norm_btb, k.sigma_min);
    let mut audit = InequalityAudit::new();
    for r in 1..potentials.len().min(xs.len().saturating_sub(1)) {
        let d1 = &xs[r + 1] - &xs[r];
        let d0 = &xs[r] - &xs[r - 1];
        let drop = potentials[r - 1] - potentials[r];
        let need = c1 * d1.norm_squared() + c2 * weighted_sq(btb, &(&d1 - &d0));
        audit.check(need, drop, slack);
    }
    audit
}

/// Checks `values[j+1] ≤ values[j] + slack` for every `j ≥ from`.
pub fn audit_nonincreasing(values: &[f64], from: usize, slack: f64) -> InequalityAudit {
    let mut audit = InequalityAudit::new();
    for j in from..values.len().saturating_sub(1) {
        audit.check(values[j + 1], values[j], slack);
    }
    audit
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::QuadraticObjective;

    fn zero_f(n: usize) -> QuadraticObjective {
        QuadraticObjective::new(DMatrix::zeros(n, n), DVector::zeros(n), 0.0).unwrap()
    }

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_vec(x.to_vec())
    }

    #[test]
    fn lagrangian_examples() {
        let f = zero_f(2);
        let cs = ConstraintSystem::new(DMatrix::identity(2, 2), DVector::zeros(2)).unwrap();
        let x = v(&[1.0, 0.0]);
        assert_eq!(augmented_lagrangian(&f, &cs, &x, &v(&[1.0, 0.0]), 2.0), 2.0);
        assert_eq!(optimality_gap_q(&f, &cs, &x, &DVector::zeros(2), 1.0), 2.0);
        // β = 0 is the ordinary Lagrangian
        assert_eq!(augmented_lagrangian(&f, &cs, &x, &v(&[3.0, 0.0]), 0.0), 3.0);
        let p = potential(&f, &cs, &x, &x, &v(&[1.0, 0.0]), 0.0, 2.0, &DMatrix::identity(2, 2));
        assert_eq!(p, 2.0);
    }

    #[test]
    fn potential_ip_reduces_with_constant_penalty() {
        let f = zero_f(2);
        let cs = ConstraintSystem::new(DMatrix::identity(2, 2), DVector::zeros(2)).unwrap();
        let btb = DMatrix::identity(2, 2) * 2.0;
        let x = v(&[1.0, -1.0]);
        let xp = v(&[0.5, 0.0]);
        let mu = v(&[0.2, 0.1]);
        let beta = 3.0;
        let ip = potential_ip(&f, &cs, &x, &xp, &mu, 0.4, beta, beta, &btb);
        let fixed = potential(&f, &cs, &x, &xp, &mu, 0.4 * beta, beta, &btb);
        assert!((ip - fixed).abs() < 1e-12);
    }

    #[test]
    fn nu_hat_examples() {
        let zeros = vec![0.0; 10];
        assert_eq!(nu_hat(&zeros), 0.0);
        let harmonic: Vec<f64> = (1..=1000).map(|r| 1.0 / r as f64).collect();
        let nu = nu_hat(&harmonic);
        assert!((nu - 999.0 / 1000.0).abs() < 1e-12);
    }

    #[test]
    fn monotone_and_burn_in() {
        let p = [5.0, 6.0, 4.0, 3.0, 3.5, 3.0, 2.0, 1.0];
        assert_eq!(monotone_from(&p, 1e-12), 4);
        assert_eq!(burn_in(&p, 2, 1e-12), Some(1));
        assert_eq!(burn_in(&p, 3, 1e-12), Some(4));
        assert_eq!(burn_in(&p, 10, 1e-12), None);
    }

    #[test]
    fn csv_layout() {
        let trace = ConvergenceTrace {
            records: vec![IterationRecord {
                r: 0,
                beta_used: 2.0,
                aug_lagrangian: 1.0,
                potential: 1.5,
                gap_q: 0.25,
                constraint_violation: 0.5,
                step_norm: 0.1,
                dual_step_norm: 1.0,
                inexact_residual: None,
            }],
            termination: Some(Termination::MaxIterations),
            config_echo: vec!["variant = prox_pda".into()],
            notes: vec![],
        };
        let csv = trace.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("# variant = prox_pda"));
        assert_eq!(lines.next(), Some(CSV_COLUMNS.join(",").as_str()));
        assert!(lines.next().unwrap().ends_with(','));
    }
}
