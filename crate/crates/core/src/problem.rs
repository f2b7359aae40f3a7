//! Objectives, constraint systems and the scalar nonconvex loss catalog.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{map_slice, ExecMode};
use crate::graph::{spectral_info, GraphError, SpectralInfo, DEFAULT_TOL_ZERO};
use crate::linalg::{column_space_projector, sym_max_eigenvalue, sym_min_eigenvalue};

/// Smallest Lipschitz constant ever reported, so that zero or linear
/// objectives still have a positive constant.
pub const LIPSCHITZ_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("unknown component kind {0:?}")]
    UnknownKind(String),
    #[error("weight must be positive, got {0}")]
    BadWeight(f64),
    #[error("empty block list")]
    EmptyBlocks,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("constraint matrix: {0}")]
    Spectral(#[from] GraphError),
    #[error("degenerate sampling region")]
    DegenerateRegion,
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("constraint system is infeasible (residual {0:.3e})")]
    Infeasible(f64),
}

/// A continuously differentiable objective with Lipschitz gradient.
pub trait SmoothObjective: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    /// Lipschitz constant of the gradient.
    fn lipschitz(&self) -> f64;
    /// A lower bound `f̲` on the objective (may be `-inf`).
    fn lower_bound(&self) -> f64;
    /// The shift `δ ≥ 0` making `f + (δ/2)‖Ax−b‖²` bounded below.
    fn delta(&self) -> f64 {
        0.0
    }
    fn is_convex(&self) -> bool;
    /// A bound on `‖∇f‖`, when one is known.
    fn gradient_bound(&self) -> Option<f64> {
        None
    }
    /// `(H, g)` with `∇f(x) = Hx + g` exactly, for quadratic objectives.
    fn quadratic_form(&self) -> Option<(DMatrix<f64>, DVector<f64>)> {
        None
    }
    /// `f(x) − f̲`, the normalization under which the objective is nonnegative.
    fn normalized_value(&self, x: &DVector<f64>) -> f64 {
        let lb = self.lower_bound();
        if lb.is_finite() {
            self.value(x) - lb
        } else {
            self.value(x)
        }
    }
}

/// Scalar loss shapes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComponentKind {
    Sigmoid,
    Arctan,
    Tanh,
    /// The logistic function `eˣ/(1+eˣ)`.
    Logit,
    /// `log(1+x²)`.
    Log1pSq,
    /// `q·x²`.
    Quadratic {
        q: f64,
    },
    Sin,
    Cos,
    /// `sin(x)/x`.
    Sinc,
}

// max |φ''| for each kind, located by a dense scan of φ'' and confirmed in
// closed form: sigmoid/logistic 1/(6√3) at σ = (3±√3)/6, tanh 4/(3√3) at
// tanh = ±1/√3, arctan 9/(8√3) at x = ±1/√3, log(1+x²) 2 at 0, sinc 1/3 at 0.
const SIGMOID_CURV: f64 = 0.096_225_044_864_937_63;
const TANH_CURV: f64 = 0.769_800_358_919_501;
const ATAN_CURV: f64 = 0.649_519_052_838_329;
const LOG1P_SQ_CURV: f64 = 2.0;
const SINC_CURV: f64 = 1.0 / 3.0;
// min of sin(x)/x, attained at the first positive root of tan x = x.
const SINC_MIN: f64 = -0.217_233_628_211_221_66;
// max |sinc'|.
const SINC_SLOPE: f64 = 0.436_181_817_3;

impl ComponentKind {
    /// Kinds whose constants are established analytically (the trigonometric
    /// ones are available but not audited).
    pub fn is_audited(&self) -> bool {
        !matches!(self, ComponentKind::Sin | ComponentKind::Cos | ComponentKind::Sinc)
    }

    fn eval(&self, t: f64) -> (f64, f64) {
        match *self {
            ComponentKind::Sigmoid | ComponentKind::Logit => {
                let s = logistic(t);
                (s, s * (1.0 - s))
            }
            ComponentKind::Arctan => (t.atan(), 1.0 / (1.0 + t * t)),
            ComponentKind::Tanh => {
                let th = t.tanh();
                (th, 1.0 - th * th)
            }
            ComponentKind::Log1pSq => ((t * t).ln_1p(), 2.0 * t / (1.0 + t * t)),
            ComponentKind::Quadratic { q } => (q * t * t, 2.0 * q * t),
            ComponentKind::Sin => (t.sin(), t.cos()),
            ComponentKind::Cos => (t.cos(), -t.sin()),
            ComponentKind::Sinc => {
                if t.abs() < 1e-4 {
                    let t2 = t * t;
                    (1.0 - t2 / 6.0 + t2 * t2 / 120.0, -t / 3.0 + t * t2 / 30.0)
                } else {
                    let (s, c) = t.sin_cos();
                    (s / t, (t * c - s) / (t * t))
                }
            }
        }
    }

    fn curvature(&self) -> f64 {
        match *self {
            ComponentKind::Sigmoid | ComponentKind::Logit => SIGMOID_CURV,
            ComponentKind::Arctan => ATAN_CURV,
            ComponentKind::Tanh => TANH_CURV,
            ComponentKind::Log1pSq => LOG1P_SQ_CURV,
            ComponentKind::Quadratic { q } => 2.0 * q.abs(),
            ComponentKind::Sin | ComponentKind::Cos => 1.0,
            ComponentKind::Sinc => SINC_CURV,
        }
    }

    fn infimum(&self) -> f64 {
        match *self {
            ComponentKind::Sigmoid | ComponentKind::Logit | ComponentKind::Log1pSq => 0.0,
            ComponentKind::Arctan => -PI / 2.0,
            ComponentKind::Tanh | ComponentKind::Sin | ComponentKind::Cos => -1.0,
            ComponentKind::Quadratic { q } => {
                if q >= 0.0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            ComponentKind::Sinc => SINC_MIN,
        }
    }

    fn slope_bound(&self) -> Option<f64> {
        match *self {
            ComponentKind::Sigmoid | ComponentKind::Logit => Some(0.25),
            ComponentKind::Arctan
            | ComponentKind::Tanh
            | ComponentKind::Log1pSq
            | ComponentKind::Sin
            | ComponentKind::Cos => Some(1.0),
            ComponentKind::Sinc => Some(SINC_SLOPE),
            ComponentKind::Quadratic { q } => (q == 0.0).then_some(0.0),
        }
    }
}

fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComponentKind::Sigmoid => write!(f, "sigmoid"),
            ComponentKind::Arctan => write!(f, "arctan"),
            ComponentKind::Tanh => write!(f, "tanh"),
            ComponentKind::Logit => write!(f, "logit"),
            ComponentKind::Log1pSq => write!(f, "log1p_sq"),
            ComponentKind::Quadratic { q } => write!(f, "quadratic({q})"),
            ComponentKind::Sin => write!(f, "sin"),
            ComponentKind::Cos => write!(f, "cos"),
            ComponentKind::Sinc => write!(f, "sinc"),
        }
    }
}

impl FromStr for ComponentKind {
    type Err = ProblemError;

    /// Accepts the display names; `quadratic` alone means `q = 1/2`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let kind = match s {
            "sigmoid" => ComponentKind::Sigmoid,
            "arctan" | "atan" => ComponentKind::Arctan,
            "tanh" => ComponentKind::Tanh,
            "logit" | "logistic" => ComponentKind::Logit,
            "log1p_sq" | "log_one_plus_square" => ComponentKind::Log1pSq,
            "quadratic" => ComponentKind::Quadratic { q: 0.5 },
            "sin" => ComponentKind::Sin,
            "cos" => ComponentKind::Cos,
            "sinc" => ComponentKind::Sinc,
            _ => {
                let inner = s
                    .strip_prefix("quadratic(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| ProblemError::UnknownKind(s.to_string()))?;
                let q = inner
                    .trim()
                    .parse()
                    .map_err(|_| ProblemError::UnknownKind(s.to_string()))?;
                ComponentKind::Quadratic { q }
            }
        };
        Ok(kind)
    }
}

/// `w·φ(x − a)` for a catalog shape `φ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarComponent {
    pub kind: ComponentKind,
    pub shift: f64,
    pub weight: f64,
}

impl ScalarComponent {
    pub fn new(kind: ComponentKind, shift: f64, weight: f64) -> Result<Self, ProblemError> {
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(ProblemError::BadWeight(weight));
        }
        Ok(ScalarComponent { kind, shift, weight })
    }

    pub fn value(&self, x: f64) -> f64 {
        self.weight * self.kind.eval(x - self.shift).0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.weight * self.kind.eval(x - self.shift).1
    }

    pub fn lipschitz(&self) -> f64 {
        self.weight * self.kind.curvature()
    }

    pub fn lower_bound(&self) -> f64 {
        self.weight * self.kind.infimum()
    }

    pub fn is_convex(&self) -> bool {
        matches!(self.kind, ComponentKind::Quadratic { q } if q >= 0.0)
    }
}

/// A scalar function `Σ_c w_c φ_c(x − a_c)` of one variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSum {
    pub components: Vec<ScalarComponent>,
}

impl ComponentSum {
    pub fn new(components: Vec<ScalarComponent>) -> Result<Self, ProblemError> {
        if components.is_empty() {
            return Err(ProblemError::EmptyBlocks);
        }
        Ok(ComponentSum { components })
    }

    pub fn single(kind: ComponentKind, shift: f64, weight: f64) -> Result<Self, ProblemError> {
        ComponentSum::new(vec![ScalarComponent::new(kind, shift, weight)?])
    }

    pub fn value_at(&self, x: f64) -> f64 {
        self.components.iter().map(|c| c.value(x)).sum()
    }

    pub fn derivative_at(&self, x: f64) -> f64 {
        self.components.iter().map(|c| c.derivative(x)).sum()
    }

    pub fn is_audited(&self) -> bool {
        self.components.iter().all(|c| c.kind.is_audited())
    }

    /// `(h, g)` with `φ'(x) = h x + g` when every component is quadratic.
    pub fn affine_derivative(&self) -> Option<(f64, f64)> {
        let mut h = 0.0;
        let mut g = 0.0;
        for c in &self.components {
            match c.kind {
                ComponentKind::Quadratic { q } => {
                    h += 2.0 * c.weight * q;
                    g -= 2.0 * c.weight * q * c.shift;
                }
                _ => return None,
            }
        }
        Some((h, g))
    }
}

impl SmoothObjective for ComponentSum {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.value_at(x[0])
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, self.derivative_at(x[0]))
    }

    fn lipschitz(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.lipschitz())
            .sum::<f64>()
            .max(LIPSCHITZ_FLOOR)
    }

    fn lower_bound(&self) -> f64 {
        self.components.iter().map(|c| c.lower_bound()).sum()
    }

    fn is_convex(&self) -> bool {
        self.components.iter().all(|c| c.is_convex())
    }

    fn gradient_bound(&self) -> Option<f64> {
        self.components
            .iter()
            .map(|c| c.kind.slope_bound().map(|s| s * c.weight))
            .sum()
    }

    fn quadratic_form(&self) -> Option<(DMatrix<f64>, DVector<f64>)> {
        self.affine_derivative()
            .map(|(h, g)| (DMatrix::from_element(1, 1, h), DVector::from_element(1, g)))
    }
}

/// `f(x) = xᵀQx + gᵀx + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticObjective {
    q: DMatrix<f64>,
    g: DVector<f64>,
    c: f64,
    lipschitz: f64,
    lower_bound: f64,
    delta: f64,
    convex: bool,
}

impl QuadraticObjective {
    /// `q` is symmetrized.
    pub fn new(q: DMatrix<f64>, g: DVector<f64>, c: f64) -> Result<Self, ProblemError> {
        if !q.is_square() || q.nrows() != g.len() {
            return Err(ProblemError::DimensionMismatch {
                expected: q.nrows(),
                got: g.len(),
            });
        }
        let q = (&q + q.transpose()) * 0.5;
        let n = q.nrows();
        let lam_max = sym_max_eigenvalue(&q);
        let lam_min = sym_min_eigenvalue(&q);
        let lipschitz = (2.0 * lam_max.abs().max(lam_min.abs())).max(LIPSCHITZ_FLOOR);
        let scale = lam_max.abs().max(lam_min.abs()).max(1.0);
        let convex = lam_min >= -1e-12 * scale;
        let lower_bound = if convex {
            // min of xᵀQx + gᵀx over x: finite iff g ∈ range(Q)
            let q2 = &q * 2.0;
            let svd = q2.clone().svd(true, true);
            match svd.pseudo_inverse(1e-12 * scale) {
                Ok(pinv) => {
                    let x = -(&pinv * &g);
                    if (&q2 * &x + &g).norm() <= 1e-9 * (1.0 + g.norm()) {
                        x.dot(&(&q * &x)) + g.dot(&x) + c
                    } else {
                        f64::NEG_INFINITY
                    }
                }
                Err(_) => f64::NEG_INFINITY,
            }
        } else {
            f64::NEG_INFINITY
        };
        let _ = n;
        Ok(QuadraticObjective {
            q,
            g,
            c,
            lipschitz,
            lower_bound,
            delta: 0.0,
            convex,
        })
    }

    /// Overrides the stored lower bound and the shift `δ` (for objectives that
    /// are only bounded below on the feasible set).
    pub fn with_lower_bound(mut self, lower_bound: f64, delta: f64) -> Self {
        self.lower_bound = lower_bound;
        self.delta = delta;
        self
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.g
    }
}

impl SmoothObjective for QuadraticObjective {
    fn dim(&self) -> usize {
        self.g.len()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.q * x)) + self.g.dot(x) + self.c
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.q * x * 2.0 + &self.g
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn lower_bound(&self) -> f64 {
        self.lower_bound
    }

    fn delta(&self) -> f64 {
        self.delta
    }

    fn is_convex(&self) -> bool {
        self.convex
    }

    fn quadratic_form(&self) -> Option<(DMatrix<f64>, DVector<f64>)> {
        Some((&self.q * 2.0, self.g.clone()))
    }
}

/// Smallest `δ` of the form `2^k` for which `Q + (δ/2)AᵀA ≻ 0`, i.e. the
/// quadratic `xᵀQx` plus the constraint penalty is bounded below with a unique
/// minimizer. `None` when `Q` is not positive definite on `null(A)`.
pub fn quadratic_shift_delta(q: &DMatrix<f64>, a: &DMatrix<f64>, cap: f64) -> Option<f64> {
    let ata = a.transpose() * a;
    let q = (q + q.transpose()) * 0.5;
    let scale = sym_max_eigenvalue(&q).abs().max(1.0);
    if sym_min_eigenvalue(&q) > 1e-12 * scale {
        return Some(0.0);
    }
    let mut delta = 1.0 / 64.0;
    while delta <= cap {
        if sym_min_eigenvalue(&(&q + &ata * (delta / 2.0))) > 1e-9 * scale {
            return Some(delta);
        }
        delta *= 2.0;
    }
    None
}

/// Block-separable objective `Σ_i f_i(x_i)` over consecutive coordinate blocks.
#[derive(Clone)]
pub struct SeparableObjective {
    blocks: Vec<Arc<dyn SmoothObjective>>,
    offsets: Vec<usize>,
    exec: ExecMode,
}

impl fmt::Debug for SeparableObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SeparableObjective")
            .field("n_blocks", &self.blocks.len())
            .field("dim", &self.dim())
            .finish()
    }
}

impl SeparableObjective {
    pub fn new(blocks: Vec<Arc<dyn SmoothObjective>>) -> Result<Self, ProblemError> {
        if blocks.is_empty() {
            return Err(ProblemError::EmptyBlocks);
        }
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        offsets.push(0);
        for b in &blocks {
            offsets.push(offsets.last().unwrap() + b.dim());
        }
        Ok(SeparableObjective {
            blocks,
            offsets,
            exec: ExecMode::Sequential,
        })
    }

    /// `k` independent copies of a scalar function, one per coordinate.
    pub fn replicate(f: Arc<dyn SmoothObjective>, k: usize) -> Result<Self, ProblemError> {
        SeparableObjective::new(vec![f; k])
    }

    /// Block evaluations are dispatched through `exec`.
    pub fn with_exec(mut self, exec: ExecMode) -> Self {
        self.exec = exec;
        self
    }

    pub fn blocks(&self) -> &[Arc<dyn SmoothObjective>] {
        &self.blocks
    }

    pub fn block_range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    fn check(&self, x: &DVector<f64>) {
        assert_eq!(x.len(), self.dim(), "separable objective dimension");
    }

    fn slice(&self, x: &DVector<f64>, i: usize) -> DVector<f64> {
        let r = self.block_range(i);
        x.rows(r.start, r.len()).into_owned()
    }
}

impl SmoothObjective for SeparableObjective {
    fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        self.check(x);
        let idx: Vec<usize> = (0..self.blocks.len()).collect();
        map_slice(self.exec, &idx, |&i| self.blocks[i].value(&self.slice(x, i)))
            .into_iter()
            .sum()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.check(x);
        let idx: Vec<usize> = (0..self.blocks.len()).collect();
        let parts = map_slice(self.exec, &idx, |&i| self.blocks[i].gradient(&self.slice(x, i)));
        let mut g = DVector::zeros(self.dim());
        for (i, p) in parts.into_iter().enumerate() {
            g.rows_mut(self.offsets[i], p.len()).copy_from(&p);
        }
        g
    }

    fn lipschitz(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.lipschitz())
            .fold(LIPSCHITZ_FLOOR, f64::max)
    }

    fn lower_bound(&self) -> f64 {
        self.blocks.iter().map(|b| b.lower_bound()).sum()
    }

    fn delta(&self) -> f64 {
        self.blocks.iter().map(|b| b.delta()).fold(0.0, f64::max)
    }

    fn is_convex(&self) -> bool {
        self.blocks.iter().all(|b| b.is_convex())
    }

    fn gradient_bound(&self) -> Option<f64> {
        let mut sq = 0.0;
        for b in &self.blocks {
            let g = b.gradient_bound()?;
            sq += g * g;
        }
        Some(sq.sqrt())
    }

    fn quadratic_form(&self) -> Option<(DMatrix<f64>, DVector<f64>)> {
        let n = self.dim();
        let mut h = DMatrix::zeros(n, n);
        let mut g = DVector::zeros(n);
        for (i, b) in self.blocks.iter().enumerate() {
            let (hb, gb) = b.quadratic_form()?;
            let o = self.offsets[i];
            h.view_mut((o, o), (hb.nrows(), hb.ncols())).copy_from(&hb);
            g.rows_mut(o, gb.len()).copy_from(&gb);
        }
        Some((h, g))
    }
}

/// The linear constraint `Ax = b` with cached spectral data.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    a: DMatrix<f64>,
    b: DVector<f64>,
    ata: DMatrix<f64>,
    spectral: SpectralInfo,
    projector: DMatrix<f64>,
    feasible_point: Option<DVector<f64>>,
}

impl ConstraintSystem {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self, ProblemError> {
        if a.nrows() != b.len() {
            return Err(ProblemError::DimensionMismatch {
                expected: a.nrows(),
                got: b.len(),
            });
        }
        let ata = a.transpose() * &a;
        let spectral = spectral_info(&ata, DEFAULT_TOL_ZERO)?;
        let projector = column_space_projector(&a);
        Ok(ConstraintSystem {
            a,
            b,
            ata,
            spectral,
            projector,
            feasible_point: None,
        })
    }

    /// Attaches a point claimed to satisfy `Ax = b`; rejected if it does not.
    pub fn with_feasible_point(mut self, x: DVector<f64>, tol: f64) -> Result<Self, ProblemError> {
        let r = self.violation(&x);
        if r > tol {
            return Err(ProblemError::Infeasible(r));
        }
        self.feasible_point = Some(x);
        Ok(self)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn ata(&self) -> &DMatrix<f64> {
        &self.ata
    }

    pub fn spectral(&self) -> &SpectralInfo {
        &self.spectral
    }

    pub fn sigma_min(&self) -> f64 {
        self.spectral.sigma_min_nonzero
    }

    pub fn feasible_point(&self) -> Option<&DVector<f64>> {
        self.feasible_point.as_ref()
    }

    pub fn n_vars(&self) -> usize {
        self.a.ncols()
    }

    pub fn n_rows(&self) -> usize {
        self.a.nrows()
    }

    /// `Ax − b`.
    pub fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x - &self.b
    }

    pub fn violation(&self, x: &DVector<f64>) -> f64 {
        self.residual(x).norm()
    }

    /// Rank deficiency of `A` (dimension of its null space).
    pub fn nullity(&self) -> usize {
        self.spectral.zero_multiplicity
    }

    /// Norm of the component of `v` orthogonal to the column space of `A`.
    pub fn orthogonal_component_norm(&self, v: &DVector<f64>) -> f64 {
        (v - &self.projector * v).norm()
    }

    /// Whether `b` lies in the column space of `A` within `tol·(1+‖b‖)`.
    pub fn is_consistent(&self, tol: f64) -> bool {
        self.orthogonal_component_norm(&self.b) <= tol * (1.0 + self.b.norm())
    }
}

/// Central differences `(f(x+h eᵢ) − f(x−h eᵢ)) / 2h`.
pub fn finite_diff_gradient<F>(f: F, x: &DVector<f64>, h: f64) -> DVector<f64>
where
    F: Fn(&DVector<f64>) -> f64,
{
    let mut g = DVector::zeros(x.len());
    let mut xp = x.clone();
    for i in 0..x.len() {
        let xi = x[i];
        xp[i] = xi + h;
        let fp = f(&xp);
        xp[i] = xi - h;
        let fm = f(&xp);
        xp[i] = xi;
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

/// Largest sampled ratio `‖∇f(x) − ∇f(y)‖ / ‖x − y‖` over the box
/// `[lo, hi]^N`. Half of the pairs are close together to probe local
/// curvature; the other half are independent draws.
pub fn estimate_lipschitz(
    f: &dyn SmoothObjective,
    lo: f64,
    hi: f64,
    n_samples: usize,
    seed: u64,
) -> Result<f64, ProblemError> {
    if n_samples < 2 {
        return Err(ProblemError::TooFewSamples(n_samples));
    }
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(ProblemError::DegenerateRegion);
    }
    let n = f.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = hi - lo;
    let mut best: f64 = 0.0;
    for k in 0..n_samples {
        let x = DVector::from_fn(n, |_, _| rng.gen_range(lo..hi));
        let y = if k % 2 == 0 {
            let scale = width * 1e-3;
            DVector::from_fn(n, |i, _| (x[i] + rng.gen_range(-scale..scale)).clamp(lo, hi))
        } else {
            DVector::from_fn(n, |_, _| rng.gen_range(lo..hi))
        };
        let d = (&x - &y).norm();
        if d > 0.0 {
            best = best.max((f.gradient(&x) - f.gradient(&y)).norm() / d);
        }
    }
    Ok(best)
}
