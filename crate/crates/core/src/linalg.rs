//! Small dense linear-algebra helpers shared by the solvers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Ascending eigenvalues of a symmetric matrix.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    vals
}

/// Largest eigenvalue of a symmetric matrix (0 for an empty matrix).
pub fn sym_max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).last().copied().unwrap_or(0.0)
}

/// Smallest eigenvalue of a symmetric matrix (0 for an empty matrix).
pub fn sym_min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(0.0)
}

/// `vᵀ M v`.
pub fn quad_form(m: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    v.dot(&(m * v))
}

/// Solves `m x = rhs` for a symmetric `m`, trying Cholesky first and falling
/// back to LU for indefinite systems.
pub fn solve_symmetric(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(chol) = m.clone().cholesky() {
        return Some(chol.solve(rhs));
    }
    m.clone().lu().solve(rhs)
}

/// Orthogonal projector onto the column space of `a` (an `M×M` matrix),
/// built as `A (AᵀA)⁺ Aᵀ` from the symmetric eigendecomposition of `AᵀA`.
pub fn column_space_projector(a: &DMatrix<f64>) -> DMatrix<f64> {
    let m = a.nrows();
    if a.ncols() == 0 || m == 0 {
        return DMatrix::zeros(m, m);
    }
    let eig = (a.transpose() * a).symmetric_eigen();
    let lmax = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let tol = lmax * (m.max(a.ncols()) as f64) * f64::EPSILON * 16.0;
    let mut p = DMatrix::zeros(m, m);
    for (k, l) in eig.eigenvalues.iter().enumerate() {
        if *l > tol {
            let u = a * eig.eigenvectors.column(k) / l.sqrt();
            p += &u * u.transpose();
        }
    }
    p
}

/// Max-norm of the difference of two vectors.
pub fn max_abs_diff(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Kronecker product `m ⊗ I_k`.
pub fn kron_identity(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    if k == 1 {
        return m.clone();
    }
    m.kronecker(&DMatrix::identity(k, k))
}
