//! Shared oracles and instance builders for the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use proxpda::problem::{ComponentKind, ComponentSum, QuadraticObjective, ScalarComponent};
use proxpda::{Graph, SmoothObjective};
use rand::Rng;

/// `½ h (x − a)²` as a scalar objective.
pub fn shifted_quadratic(h: f64, a: f64) -> Arc<dyn SmoothObjective> {
    Arc::new(
        QuadraticObjective::new(
            DMatrix::from_element(1, 1, 0.5 * h),
            DVector::from_element(1, -h * a),
            0.5 * h * a * a,
        )
        .unwrap(),
    )
}

/// `w·tanh(x − a) + κ(x − b)²`.
pub fn tanh_plus_quadratic(w: f64, a: f64, kappa: f64, b: f64) -> Arc<dyn SmoothObjective> {
    Arc::new(
        ComponentSum::new(vec![
            ScalarComponent::new(ComponentKind::Tanh, a, w).unwrap(),
            ScalarComponent::new(ComponentKind::Quadratic { q: kappa }, b, 1.0).unwrap(),
        ])
        .unwrap(),
    )
}

pub fn scalars(v: &[f64]) -> Vec<DVector<f64>> {
    v.iter().map(|x| DVector::from_element(1, *x)).collect()
}

/// Laplacians built straight from the edge list.
pub fn laplacians(g: &Graph) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
    let n = g.n_nodes();
    let mut lm = DMatrix::zeros(n, n);
    let mut lp = DMatrix::zeros(n, n);
    let mut d = DVector::zeros(n);
    for &(i, j) in g.edges() {
        d[i] += 1.0;
        d[j] += 1.0;
        lm[(i, j)] -= 1.0;
        lm[(j, i)] -= 1.0;
        lp[(i, j)] += 1.0;
        lp[(j, i)] += 1.0;
    }
    for i in 0..n {
        lm[(i, i)] = d[i];
        lp[(i, i)] = d[i];
    }
    (lm, lp, d)
}

fn grads(locals: &[Arc<dyn SmoothObjective>], x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(x.nrows(), x.ncols());
    for (i, f) in locals.iter().enumerate() {
        let xi = x.row(i).transpose();
        g.set_row(i, &f.gradient(&xi).transpose());
    }
    g
}

fn rows(xs: &[DVector<f64>]) -> DMatrix<f64> {
    let k = xs[0].len();
    DMatrix::from_fn(xs.len(), k, |i, j| xs[i][j])
}

/// Matrix form of the linearized fixed-penalty recursion
/// `x⁺ = x − (1/2β)D⁻¹(g(x) − g(x_prev)) + Wx − ½(I+W)x_prev`,
/// started with `x_prev = x⁰` and a zero previous gradient. Rows are nodes.
pub fn extra_matrix_run(
    g: &Graph,
    locals: &[Arc<dyn SmoothObjective>],
    x0: &[DVector<f64>],
    beta: f64,
    rounds: usize,
) -> Vec<DMatrix<f64>> {
    let n = g.n_nodes();
    let (lm, lp, d) = laplacians(g);
    let dinv = DMatrix::from_diagonal(&d.map(|v| 1.0 / v));
    let w = &dinv * (&lp - &lm) * 0.5;
    let iw = DMatrix::identity(n, n) + &w;
    let mut x = rows(x0);
    let mut xp = x.clone();
    let mut gp = DMatrix::zeros(x.nrows(), x.ncols());
    let mut out = vec![x.clone()];
    for _ in 0..rounds {
        let gx = grads(locals, &x);
        let next = &x - &dinv * (&gx - &gp) / (2.0 * beta) + &w * &x - &iw * &xp * 0.5;
        xp = x;
        x = next;
        gp = gx;
        out.push(x.clone());
    }
    out
}

/// Matrix form of the proximal recursion for scalar quadratic locals
/// `f_i = ½ h_i (x − a_i)²`:
/// `x⁺ + (1/2β)D⁻¹∇f(x⁺) = x + (1/2β)D⁻¹∇f(x) + Wx − ½(I+W)x_prev`,
/// with the gradient term on the right taken as zero in the first round.
pub fn proxpda_matrix_run_quadratic(
    g: &Graph,
    h: &[f64],
    a: &[f64],
    x0: &[f64],
    beta: f64,
    rounds: usize,
) -> Vec<DVector<f64>> {
    let n = g.n_nodes();
    let (lm, lp, d) = laplacians(g);
    let dinv = DMatrix::from_diagonal(&d.map(|v| 1.0 / v));
    let w = &dinv * (&lp - &lm) * 0.5;
    let iw = DMatrix::identity(n, n) + &w;
    let grad = |x: &DVector<f64>| DVector::from_fn(n, |i, _| h[i] * (x[i] - a[i]));
    let mut x = DVector::from_column_slice(x0);
    let mut xp = x.clone();
    let mut gmem = DVector::zeros(n);
    let mut out = vec![x.clone()];
    for _ in 0..rounds {
        let rhs = &x + &dinv * &gmem / (2.0 * beta) + &w * &x - &iw * &xp * 0.5;
        // x_i (1 + h_i/(2βd_i)) = rhs_i + h_i a_i/(2βd_i)
        let next = DVector::from_fn(n, |i, _| {
            let s = 2.0 * beta * d[i];
            (rhs[i] + h[i] * a[i] / s) / (1.0 + h[i] / s)
        });
        xp = x;
        x = next;
        gmem = grad(&x);
        out.push(x.clone());
    }
    out
}

/// Matrix form of the increasing-penalty linearized recursion with
/// `BᵀB = L₊ + I` and `W = ½(D + ½I)⁻¹(L₊ − L₋ + I)`:
///
/// ```text
/// x⁺ = x − (1/2β⁺)(D+½I)⁻¹(g − g_prev) + Wx − ((β⁺−β)/β⁺)x
///      − ((β−β⁺)/(2β⁺))(I−W)x − (β/(2β⁺))(I+W)x_prev
/// ```
pub fn ip_matrix_run(
    g: &Graph,
    locals: &[Arc<dyn SmoothObjective>],
    x0: &[DVector<f64>],
    beta: impl Fn(usize) -> f64,
    rounds: usize,
) -> Vec<DMatrix<f64>> {
    let n = g.n_nodes();
    let (lm, lp, d) = laplacians(g);
    let id = DMatrix::<f64>::identity(n, n);
    let dh = DMatrix::from_diagonal(&d.map(|v| 1.0 / (v + 0.5)));
    let w = &dh * (&lp - &lm + &id) * 0.5;
    let mut x = rows(x0);
    let mut xp = x.clone();
    let mut gp = DMatrix::zeros(x.nrows(), x.ncols());
    let mut out = vec![x.clone()];
    for r in 0..rounds {
        let (bn, bc) = (beta(r + 1), beta(r));
        let gx = grads(locals, &x);
        let next = &x - &dh * (&gx - &gp) / (2.0 * bn) + &w * &x
            - &x * ((bn - bc) / bn)
            - (&id - &w) * &x * ((bc - bn) / (2.0 * bn))
            - (&id + &w) * &xp * (bc / (2.0 * bn));
        xp = x;
        x = next;
        gp = gx;
        out.push(x.clone());
    }
    out
}

/// Matrix with node rows to node-major stacked vector.
pub fn flatten(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_fn(m.nrows() * m.ncols(), |idx, _| m[(idx / m.ncols(), idx % m.ncols())])
}

/// Random scalar local objective mixing nonconvex shapes with a quadratic.
pub fn random_mixture<R: Rng>(rng: &mut R) -> Arc<dyn SmoothObjective> {
    let kinds = [ComponentKind::Sigmoid, ComponentKind::Tanh, ComponentKind::Arctan];
    let mut comps = Vec::new();
    for _ in 0..rng.gen_range(1..=2) {
        let kind = kinds[rng.gen_range(0..kinds.len())];
        comps.push(ScalarComponent::new(kind, rng.gen_range(-2.0..2.0), rng.gen_range(0.2..1.0)).unwrap());
    }
    let q = rng.gen_range(0.05..0.5);
    comps.push(ScalarComponent::new(ComponentKind::Quadratic { q }, rng.gen_range(-2.0..2.0), 1.0).unwrap());
    Arc::new(ComponentSum::new(comps).unwrap())
}

/// Bisection root of a continuous scalar function on `[lo, hi]`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    assert!(flo * f(hi) <= 0.0, "root not bracketed");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
