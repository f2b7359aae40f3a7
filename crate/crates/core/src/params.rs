//! Penalty and proximal coefficient bounds, penalty schedules and
//! inexactness schedules.
//!
//! Functions named `*_bound` / `*_threshold` return the raw bound. The
//! `*_params` helpers turn a strict inequality into a usable value by applying
//! a relative margin (default [`DEFAULT_MARGIN`]).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Multiplier applied to a strict lower bound to obtain an admissible value.
pub const DEFAULT_MARGIN: f64 = 1.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be nonnegative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("schedule exponent must lie in (0, 1], got {0}")]
    BadExponent(f64),
    #[error("error schedule exponent must exceed 1/2, got {0}")]
    BadErrorExponent(f64),
    #[error("margin must exceed 1, got {0}")]
    BadMargin(f64),
    #[error("no admissible penalty below {0:e}")]
    NoPenaltyFound(f64),
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
}

fn positive(name: &'static str, value: f64) -> Result<f64, ParamError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(ParamError::NonPositive { name, value })
    }
}

fn nonnegative(name: &'static str, value: f64) -> Result<f64, ParamError> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(ParamError::Negative { name, value })
    }
}

fn margin_ok(margin: f64) -> Result<f64, ParamError> {
    if margin > 1.0 && margin.is_finite() {
        Ok(margin)
    } else {
        Err(ParamError::BadMargin(margin))
    }
}

/// Proximal coefficient `c` and penalty `β` for a fixed-penalty run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyParams {
    pub c: f64,
    pub beta: f64,
}

/// `max{δ/L, 4‖BᵀB‖/σ_min}`.
pub fn proximal_coefficient_bound(delta: f64, l: f64, norm_btb: f64, sigma_min: f64) -> Result<f64, ParamError> {
    nonnegative("delta", delta)?;
    positive("L", l)?;
    nonnegative("norm_btb", norm_btb)?;
    positive("sigma_min", sigma_min)?;
    Ok((delta / l).max(4.0 * norm_btb / sigma_min))
}

/// `β* = (L/2)(2c+1+√((2c+1)² + 16L²/σ_min))`; any `β > β*` is admissible.
///
/// For `L < 1` this falls below the positive root of
/// [`descent_coefficient_step`], `(L/2)(2c+1+√((2c+1)² + 16/σ_min))`, so the
/// larger of the two is returned. They coincide at `L = 1`.
pub fn penalty_bound(c: f64, l: f64, sigma_min: f64) -> Result<f64, ParamError> {
    positive("c", c)?;
    positive("L", l)?;
    positive("sigma_min", sigma_min)?;
    let a = 2.0 * c + 1.0;
    let display = 0.5 * l * (a + (a * a + 16.0 * l * l / sigma_min).sqrt());
    let root = 0.5 * l * (a + (a * a + 16.0 / sigma_min).sqrt());
    Ok(display.max(root))
}

/// `c` and `β` for the nonconvex fixed-penalty iteration, each a margin above
/// its bound.
pub fn nonconvex_params(
    delta: f64,
    l: f64,
    norm_btb: f64,
    sigma_min: f64,
    margin: f64,
) -> Result<PenaltyParams, ParamError> {
    margin_ok(margin)?;
    let c = margin * proximal_coefficient_bound(delta, l, norm_btb, sigma_min)?;
    let c = positive("c", c)?;
    let beta = margin * penalty_bound(c, l, sigma_min)?;
    Ok(PenaltyParams { c, beta })
}

/// Coefficient of `‖x^{r+1}−x^r‖²` in the per-iteration potential decrease:
/// `(β−L)/2 − 2L²/(βσ_min) − cL`.
pub fn descent_coefficient_step(c: f64, beta: f64, l: f64, sigma_min: f64) -> f64 {
    (beta - l) / 2.0 - 2.0 * l * l / (beta * sigma_min) - c * l
}

/// Coefficient of the second-difference term in the potential decrease:
/// `cβ/2 − 2β‖BᵀB‖/σ_min`.
pub fn descent_coefficient_curvature(c: f64, beta: f64, norm_btb: f64, sigma_min: f64) -> f64 {
    c * beta / 2.0 - 2.0 * beta * norm_btb / sigma_min
}

/// The convex-case lower bound `max{2L/(βσ_min), 4‖BᵀB‖/σ_min, δ/β}`, valid
/// for any `β > 0`.
pub fn convex_coefficient_threshold(
    beta: f64,
    l: f64,
    sigma_min: f64,
    norm_btb: f64,
    delta: f64,
) -> Result<f64, ParamError> {
    positive("beta", beta)?;
    nonnegative("L", l)?;
    positive("sigma_min", sigma_min)?;
    nonnegative("norm_btb", norm_btb)?;
    nonnegative("delta", delta)?;
    Ok((2.0 * l / (beta * sigma_min))
        .max(4.0 * norm_btb / sigma_min)
        .max(delta / beta))
}

/// Convex-case `c`: the threshold times [`DEFAULT_MARGIN`].
pub fn convex_coefficient_bound(
    beta: f64,
    l: f64,
    sigma_min: f64,
    norm_btb: f64,
    delta: f64,
) -> Result<f64, ParamError> {
    Ok(DEFAULT_MARGIN * convex_coefficient_threshold(beta, l, sigma_min, norm_btb, delta)?)
}

/// Raw bounds for the inexact iteration: `c = max{δ/L, 6‖BᵀB‖/σ_min}` and
/// `β* = ((L+1)/2)(2c+1+√((2c+1)² + 16(L+1)²/σ_min))`.
pub fn inexact_bounds(delta: f64, l: f64, norm_btb: f64, sigma_min: f64) -> Result<PenaltyParams, ParamError> {
    nonnegative("delta", delta)?;
    positive("L", l)?;
    nonnegative("norm_btb", norm_btb)?;
    positive("sigma_min", sigma_min)?;
    let c = (delta / l).max(6.0 * norm_btb / sigma_min);
    let a = 2.0 * c + 1.0;
    let l1 = l + 1.0;
    let beta = 0.5 * l1 * (a + (a * a + 16.0 * l1 * l1 / sigma_min).sqrt());
    Ok(PenaltyParams { c, beta })
}

/// Inexact-iteration parameters: the bound on `c` as is and `β` a margin
/// above its bound.
pub fn inexact_params(
    delta: f64,
    l: f64,
    norm_btb: f64,
    sigma_min: f64,
    margin: f64,
) -> Result<PenaltyParams, ParamError> {
    margin_ok(margin)?;
    let raw = inexact_bounds(delta, l, norm_btb, sigma_min)?;
    let c = positive("c", raw.c)?;
    Ok(PenaltyParams {
        c,
        beta: margin * raw.beta,
    })
}

/// `c = min{1/(4L), 1/(12ω‖BᵀB‖)}` for the increasing-penalty potential.
pub fn ip_coefficient(l: f64, omega: f64, norm_btb: f64) -> Result<f64, ParamError> {
    positive("L", l)?;
    positive("omega", omega)?;
    positive("norm_btb", norm_btb)?;
    Ok((1.0 / (4.0 * l)).min(1.0 / (12.0 * omega * norm_btb)))
}

/// A nondecreasing penalty sequence `r ↦ β^r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum PenaltySchedule {
    /// `β^r = β⁰ (1+r)^α`.
    Power { beta0: f64, alpha: f64 },
    /// `β^r ≡ β`; the degenerate schedule used to compare with the fixed
    /// penalty iteration.
    Constant { beta: f64 },
}

/// Horizon audit of a [`PenaltySchedule`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleAudit {
    pub horizon: usize,
    pub monotone: bool,
    pub max_increment: f64,
    pub omega: f64,
    pub increments_bounded: bool,
    pub reciprocal_sum: f64,
    pub reciprocal_sum_threshold: f64,
    pub reciprocal_sum_large: bool,
    /// `β⁰/β^H`.
    pub decay_ratio: f64,
    pub decayed: bool,
}

impl ScheduleAudit {
    pub fn passed(&self) -> bool {
        self.monotone && self.increments_bounded && self.reciprocal_sum_large && self.decayed
    }
}

impl PenaltySchedule {
    /// Validates `β⁰ > 0` and `α ∈ (0, 1]`.
    pub fn power(beta0: f64, alpha: f64) -> Result<Self, ParamError> {
        positive("beta0", beta0)?;
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(ParamError::BadExponent(alpha));
        }
        Ok(PenaltySchedule::Power { beta0, alpha })
    }

    pub fn constant(beta: f64) -> Result<Self, ParamError> {
        positive("beta", beta)?;
        Ok(PenaltySchedule::Constant { beta })
    }

    pub fn beta(&self, r: usize) -> f64 {
        match *self {
            PenaltySchedule::Power { beta0, alpha } => beta0 * (1.0 + r as f64).powf(alpha),
            PenaltySchedule::Constant { beta } => beta,
        }
    }

    /// Bound on `β^{r+1} − β^r`: `β⁰α` for the power rule (attained at
    /// `r = 0` when `α = 1`), zero for a constant schedule.
    pub fn omega(&self) -> f64 {
        match *self {
            PenaltySchedule::Power { beta0, alpha } => beta0 * alpha,
            PenaltySchedule::Constant { .. } => 0.0,
        }
    }

    /// Checks the schedule conditions up to `horizon`. The reciprocal-sum
    /// threshold defaults to `10/β⁰`; decay requires `β⁰/β^H < 1e-2`.
    pub fn audit(&self, horizon: usize, threshold: Option<f64>) -> ScheduleAudit {
        let omega = self.omega();
        let mut monotone = true;
        let mut max_increment: f64 = 0.0;
        let mut reciprocal_sum = 0.0;
        let mut prev = self.beta(0);
        reciprocal_sum += 1.0 / prev;
        for r in 1..=horizon {
            let b = self.beta(r);
            let inc = b - prev;
            monotone &= inc >= 0.0;
            max_increment = max_increment.max(inc);
            reciprocal_sum += 1.0 / b;
            prev = b;
        }
        let threshold = threshold.unwrap_or(10.0 / self.beta(0));
        let decay_ratio = self.beta(0) / self.beta(horizon);
        ScheduleAudit {
            horizon,
            monotone,
            max_increment,
            omega,
            increments_bounded: max_increment <= omega * (1.0 + 1e-12),
            reciprocal_sum,
            reciprocal_sum_threshold: threshold,
            reciprocal_sum_large: reciprocal_sum > threshold,
            decay_ratio,
            decayed: decay_ratio < 1e-2,
        }
    }
}

/// Subproblem accuracy schedule `ε_r = ε₀/(1+r)^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSchedule {
    pub eps0: f64,
    pub p: f64,
}

impl ErrorSchedule {
    /// Requires `p > 1/2` so that `Σ ε_r²` is finite.
    pub fn new(eps0: f64, p: f64) -> Result<Self, ParamError> {
        nonnegative("eps0", eps0)?;
        if !(p > 0.5) || !p.is_finite() {
            return Err(ParamError::BadErrorExponent(p));
        }
        Ok(ErrorSchedule { eps0, p })
    }

    /// The exact schedule `ε ≡ 0`.
    pub fn zero() -> Self {
        ErrorSchedule { eps0: 0.0, p: 1.0 }
    }

    pub fn is_exact(&self) -> bool {
        self.eps0 == 0.0
    }

    pub fn eps(&self, r: usize) -> f64 {
        self.eps0 / (1.0 + r as f64).powf(self.p)
    }

    /// `Σ_{r=lo}^{hi} ε_r²`.
    pub fn square_sum(&self, lo: usize, hi: usize) -> f64 {
        (lo..=hi).map(|r| self.eps(r).powi(2)).sum()
    }

    /// `Σ_{r=lo}^{hi} (ε_{r+1} − ε_r)²`.
    pub fn difference_square_sum(&self, lo: usize, hi: usize) -> f64 {
        (lo..=hi).map(|r| (self.eps(r + 1) - self.eps(r)).powi(2)).sum()
    }

    /// Upper bound `ε₀² H^{1−2p}/(2p−1)` on `Σ_{r≥H} ε_r²`, for `H ≥ 1`.
    pub fn tail_bound(&self, h: usize) -> f64 {
        let h = h.max(1) as f64;
        self.eps0 * self.eps0 * h.powf(1.0 - 2.0 * self.p) / (2.0 * self.p - 1.0)
    }
}

/// Per-inequality residuals of the matrix factorization parameter conditions
/// (each must be strictly positive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MfConditionReport {
    pub residuals: [f64; 4],
}

impl MfConditionReport {
    pub fn passed(&self) -> bool {
        self.residuals.iter().all(|r| *r > 0.0)
    }

    pub fn failed(&self) -> Vec<usize> {
        (0..4).filter(|&k| !(self.residuals[k] > 0.0)).collect()
    }
}

/// Evaluates
/// 1. `(β+2γ)/2 − 8(τ²+4γ²)/(βσ) − cd/2`
/// 2. `1/2 − 8/(σβ) − c/d`
/// 3. `1/2 − 8τ/(σβ) − cτ/d`
/// 4. `cβ/2 − 2β‖BᵀB‖/σ`
pub fn mf_conditions(
    beta: f64,
    c: f64,
    d: f64,
    tau: f64,
    gamma: f64,
    sigma_min: f64,
    norm_btb: f64,
) -> MfConditionReport {
    let s = sigma_min;
    MfConditionReport {
        residuals: [
            (beta + 2.0 * gamma) / 2.0 - 8.0 * (tau * tau + 4.0 * gamma * gamma) / (beta * s) - c * d / 2.0,
            0.5 - 8.0 / (s * beta) - c / d,
            0.5 - 8.0 * tau / (s * beta) - c * tau / d,
            c * beta / 2.0 - 2.0 * beta * norm_btb / s,
        ],
    }
}

/// `(c, d, β)` for the matrix factorization iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MfParams {
    pub c: f64,
    pub d: f64,
    pub beta: f64,
}

const MF_BETA_CAP: f64 = 1e12;

/// Smallest `β` (to 1% relative) passing all four conditions for fixed
/// `(c, d)`, found by doubling from 1 and bisecting.
pub fn mf_min_beta(c: f64, d: f64, tau: f64, gamma: f64, sigma_min: f64, norm_btb: f64) -> Option<f64> {
    let ok = |b: f64| mf_conditions(b, c, d, tau, gamma, sigma_min, norm_btb).passed();
    let mut hi = 1.0;
    while !ok(hi) {
        hi *= 2.0;
        if hi > MF_BETA_CAP {
            return None;
        }
    }
    let mut lo = hi / 2.0;
    if ok(lo) {
        return Some(lo);
    }
    while hi / lo > 1.01 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Suggested `(c, d, β)`: `c = 4‖BᵀB‖/σ + ν`, then `d` is increased
/// geometrically from `max{4, 2cτ}` and the `d` giving the smallest admissible
/// `β` is kept.
pub fn mf_suggest(tau: f64, gamma: f64, sigma_min: f64, norm_btb: f64, nu: f64) -> Result<MfParams, ParamError> {
    positive("tau", tau).map_err(|_| ParamError::Degenerate("ball radius must be positive"))?;
    nonnegative("gamma", gamma)?;
    positive("sigma_min", sigma_min)?;
    positive("norm_btb", norm_btb)?;
    positive("nu", nu)?;
    let c = 4.0 * norm_btb / sigma_min + nu;
    let d0 = 4.0_f64.max(2.0 * c * tau);
    let mut best: Option<MfParams> = None;
    let mut d = d0;
    for _ in 0..400 {
        if let Some(beta) = mf_min_beta(c, d, tau, gamma, sigma_min, norm_btb) {
            if best.is_none_or(|b| beta < b.beta) {
                best = Some(MfParams { c, d, beta });
            }
        }
        d *= 1.02;
    }
    best.ok_or(ParamError::NoPenaltyFound(MF_BETA_CAP))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn coefficient_examples() {
        assert_relative_eq!(proximal_coefficient_bound(1.0, 1.0, 4.0, 3.0).unwrap(), 16.0 / 3.0);
        assert_eq!(proximal_coefficient_bound(0.0, 1.0, 2.0, 2.0).unwrap(), 4.0);
        assert_eq!(proximal_coefficient_bound(100.0, 1.0, 1.0, 1.0).unwrap(), 100.0);
        assert!(proximal_coefficient_bound(0.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn penalty_examples() {
        assert_relative_eq!(
            penalty_bound(4.0, 1.0, 2.0).unwrap(),
            0.5 * (9.0 + 89f64.sqrt()),
            epsilon = 1e-12
        );
        let c = 16.0 / 3.0;
        let a: f64 = 35.0 / 3.0;
        let b = penalty_bound(c, 1.0, 3.0).unwrap();
        assert_relative_eq!(b, 0.5 * (a + (a * a + 16.0 / 3.0).sqrt()), epsilon = 1e-12);
        assert!((b - 11.78).abs() < 0.01);
        assert_relative_eq!(penalty_bound(2.0, 1.5, 1e12).unwrap(), 7.5, epsilon = 1e-9);
    }

    #[test]
    fn convex_examples() {
        assert_relative_eq!(
            convex_coefficient_bound(1.0, 1.0, 3.0, 4.0, 0.0).unwrap(),
            1.01 * 16.0 / 3.0
        );
        assert_relative_eq!(convex_coefficient_threshold(0.1, 1.0, 2.0, 2.0, 0.0).unwrap(), 10.0);
        assert_relative_eq!(convex_coefficient_threshold(0.01, 1e-6, 1.0, 1e-6, 1.0).unwrap(), 100.0);
        assert!(convex_coefficient_bound(0.0, 1.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn inexact_examples() {
        let p = inexact_bounds(0.0, 1.0, 2.0, 2.0).unwrap();
        assert_eq!(p.c, 6.0);
        assert_relative_eq!(p.beta, 13.0 + 201f64.sqrt(), epsilon = 1e-12);
        assert!(p.c > proximal_coefficient_bound(0.0, 1.0, 2.0, 2.0).unwrap());
        let lim = inexact_bounds(0.0, 1.0, 2.0, 1e14).unwrap();
        assert_relative_eq!(lim.beta, 2.0 * (2.0 * lim.c + 1.0), max_relative = 1e-9);
    }

    #[test]
    fn schedule_examples() {
        let s = PenaltySchedule::power(1.0, 0.5).unwrap();
        assert_relative_eq!(s.beta(5), 6f64.sqrt());
        assert!(s.beta(2) - s.beta(1) < s.beta(1) - s.beta(0));
        let lin = PenaltySchedule::power(2.0, 1.0).unwrap();
        assert_eq!(lin.beta(3), 8.0);
        assert_eq!(lin.omega(), 2.0);
        assert!(PenaltySchedule::power(1.0, 2.0).is_err());
        assert!(s.audit(100_000, None).passed());
    }

    #[test]
    fn error_schedule_examples() {
        let e = ErrorSchedule::new(1.0, 1.0).unwrap();
        assert_eq!(e.eps(3), 0.25);
        // Σ_{r≥1} 1/(1+r)² = π²/6 − 1
        let partial = e.square_sum(1, 200_000);
        assert!((partial - (std::f64::consts::PI.powi(2) / 6.0 - 1.0)).abs() < 1e-5);
        assert!(partial <= e.tail_bound(1));
        assert!(ErrorSchedule::new(1.0, 0.4).is_err());
        assert!(ErrorSchedule::new(0.0, 3.0).unwrap().is_exact());
    }

    #[test]
    fn ip_coefficient_examples() {
        assert_relative_eq!(ip_coefficient(1.0, 1.0, 2.0).unwrap(), 1.0 / 24.0);
        assert_relative_eq!(ip_coefficient(100.0, 1e-9, 1.0).unwrap(), 1.0 / 400.0);
        assert_relative_eq!(
            ip_coefficient(1.0, 0.5, 4.0).unwrap(),
            ip_coefficient(1.0, 4.0, 0.5).unwrap()
        );
    }

    #[test]
    fn mf_examples() {
        let r = mf_conditions(1000.0, 6.0, 24.0, 1.0, 0.1, 3.0, 4.0);
        let want = [
            (1000.0 + 0.2) / 2.0 - 8.0 * (1.0 + 0.04) / 3000.0 - 72.0,
            0.5 - 8.0 / 3000.0 - 0.25,
            0.5 - 8.0 / 3000.0 - 0.25,
            3000.0 - 2000.0 * 4.0 / 3.0,
        ];
        for k in 0..4 {
            assert_relative_eq!(r.residuals[k], want[k], epsilon = 1e-9);
        }
        assert!(r.passed());
        let below = mf_conditions(1e9, 4.0 * 4.0 / 3.0 - 0.1, 1e3, 1.0, 0.1, 3.0, 4.0);
        assert_eq!(below.failed(), vec![3]);
        let p = mf_suggest(1.0, 0.1, 3.0, 4.0, 0.1).unwrap();
        assert_relative_eq!(p.c, 16.0 / 3.0 + 0.1);
        assert!(mf_conditions(p.beta, p.c, p.d, 1.0, 0.1, 3.0, 4.0).passed());
        assert!(mf_suggest(0.0, 0.1, 3.0, 4.0, 0.1).is_err());
        assert!(mf_suggest(1.0, 0.1, 3.0, 4.0, 0.0).is_err());
    }
}
