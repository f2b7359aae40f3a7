//! Undirected graphs, incidence matrices, Laplacians and mixing matrices.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::sym_eigenvalues;

/// Default relative threshold under which an eigenvalue counts as zero.
pub const DEFAULT_TOL_ZERO: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph must have at least one node")]
    Empty,
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("edge ({0}, {1}) references a node outside 0..{2}")]
    OutOfRange(usize, usize, usize),
    #[error("node {0} is isolated")]
    IsolatedNode(usize),
    #[error("graph is not connected ({0} components)")]
    Disconnected(usize),
    #[error("zero matrix has no nonzero eigenvalue")]
    ZeroMatrix,
    #[error("tol_zero must lie in [0, 1), got {0}")]
    BadTolerance(f64),
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("invalid generator parameter: {0}")]
    BadGenerator(String),
    #[error("no connected sample after {0} attempts")]
    GenerationFailed(usize),
    #[error("edge list parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A simple undirected graph with edges stored as `(i, j)`, `i > j`, sorted
/// lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Validates and canonicalizes an edge list. Pairs may be given in either
    /// orientation.
    pub fn new(n_nodes: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        if n_nodes == 0 {
            return Err(GraphError::Empty);
        }
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            if a >= n_nodes || b >= n_nodes {
                return Err(GraphError::OutOfRange(a, b, n_nodes));
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            let e = (a.max(b), a.min(b));
            if !set.insert(e) {
                return Err(GraphError::DuplicateEdge(e.0, e.1));
            }
        }
        Ok(Graph {
            n_nodes,
            edges: set.into_iter().collect(),
        })
    }

    pub fn path(n: usize) -> Result<Self, GraphError> {
        let edges: Vec<_> = (1..n).map(|i| (i, i - 1)).collect();
        Graph::new(n, &edges)
    }

    pub fn cycle(n: usize) -> Result<Self, GraphError> {
        if n < 3 {
            return Err(GraphError::BadGenerator(format!(
                "cycle needs at least 3 nodes, got {n}"
            )));
        }
        let mut edges: Vec<_> = (1..n).map(|i| (i, i - 1)).collect();
        edges.push((n - 1, 0));
        Graph::new(n, &edges)
    }

    pub fn complete(n: usize) -> Result<Self, GraphError> {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..i {
                edges.push((i, j));
            }
        }
        Graph::new(n, &edges)
    }

    /// Samples G(n, p) until a connected graph appears (at most 100 draws).
    pub fn erdos_renyi<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Self, GraphError> {
        if !(0.0..=1.0).contains(&p) || p.is_nan() {
            return Err(GraphError::BadGenerator(format!("edge probability {p}")));
        }
        const ATTEMPTS: usize = 100;
        for _ in 0..ATTEMPTS {
            let mut edges = Vec::new();
            for i in 0..n {
                for j in 0..i {
                    if rng.gen::<f64>() < p {
                        edges.push((i, j));
                    }
                }
            }
            let g = Graph::new(n, &edges)?;
            if g.is_connected() {
                return Ok(g);
            }
        }
        Err(GraphError::GenerationFailed(ATTEMPTS))
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Canonical edge list.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n_nodes];
        for &(i, j) in &self.edges {
            d[i] += 1;
            d[j] += 1;
        }
        d
    }

    /// Sorted adjacency lists.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_nodes];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }

    /// Component label per node, labels in order of first appearance.
    pub fn components(&self) -> Vec<usize> {
        let adj = self.neighbors();
        let mut label = vec![usize::MAX; self.n_nodes];
        let mut next = 0;
        for s in 0..self.n_nodes {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = next;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if label[v] == usize::MAX {
                        label[v] = next;
                        queue.push_back(v);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn n_components(&self) -> usize {
        self.components().into_iter().max().map_or(0, |m| m + 1)
    }

    pub fn is_connected(&self) -> bool {
        self.n_components() == 1
    }

    pub fn require_connected(&self) -> Result<(), GraphError> {
        match self.n_components() {
            1 => Ok(()),
            k => Err(GraphError::Disconnected(k)),
        }
    }

    /// Serializes as `"n E"` followed by one `"i j"` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("{} {}\n", self.n_nodes, self.edges.len());
        for (i, j) in &self.edges {
            let _ = writeln!(s, "{i} {j}");
        }
        s
    }

    /// Parses the edge-list format. Blank lines and `#` comments are skipped.
    pub fn parse_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hl, header) = lines.next().ok_or(GraphError::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let (n, e) = parse_pair(hl, header)?;
        let mut edges = Vec::with_capacity(e);
        for (ln, l) in lines {
            edges.push(parse_pair(ln, l)?);
        }
        if edges.len() != e {
            return Err(GraphError::Parse {
                line: hl,
                msg: format!("header declares {e} edges, found {}", edges.len()),
            });
        }
        Graph::new(n, &edges)
    }
}

fn parse_pair(line: usize, s: &str) -> Result<(usize, usize), GraphError> {
    let err = |msg: String| GraphError::Parse { line, msg };
    let mut it = s.split_whitespace();
    let mut next = || -> Result<usize, GraphError> {
        let tok = it.next().ok_or_else(|| err("expected two integers".into()))?;
        tok.parse().map_err(|_| err(format!("bad integer {tok:?}")))
    };
    let a = next()?;
    let b = next()?;
    if it.next().is_some() {
        return Err(err("trailing tokens".into()));
    }
    Ok((a, b))
}

/// Incidence matrices and Laplacians of a graph.
#[derive(Debug, Clone)]
pub struct IncidenceMatrices {
    /// E×N, row e = (i, j) has +1 at column i and −1 at column j.
    pub signed: DMatrix<f64>,
    /// Entrywise absolute value of `signed`.
    pub signless: DMatrix<f64>,
    /// AᵀA.
    pub laplacian_signed: DMatrix<f64>,
    /// BᵀB.
    pub laplacian_signless: DMatrix<f64>,
    pub degrees: Vec<usize>,
}

pub fn incidence(g: &Graph) -> IncidenceMatrices {
    let (e, n) = (g.n_edges(), g.n_nodes());
    let mut a = DMatrix::zeros(e, n);
    let mut b = DMatrix::zeros(e, n);
    for (row, &(i, j)) in g.edges().iter().enumerate() {
        a[(row, i)] = 1.0;
        a[(row, j)] = -1.0;
        b[(row, i)] = 1.0;
        b[(row, j)] = 1.0;
    }
    let lm = a.transpose() * &a;
    let lp = b.transpose() * &b;
    IncidenceMatrices {
        signed: a,
        signless: b,
        laplacian_signed: lm,
        laplacian_signless: lp,
        degrees: g.degrees(),
    }
}

/// Extreme spectral data of a symmetric positive semidefinite matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralInfo {
    pub sigma_min_nonzero: f64,
    pub lambda_max: f64,
    pub zero_multiplicity: usize,
    pub tol_zero: f64,
}

/// Smallest nonzero and largest eigenvalue; eigenvalues `≤ tol_zero·λ_max`
/// count as zero.
pub fn spectral_info(m: &DMatrix<f64>, tol_zero: f64) -> Result<SpectralInfo, GraphError> {
    if !(0.0..1.0).contains(&tol_zero) {
        return Err(GraphError::BadTolerance(tol_zero));
    }
    if !m.is_square() {
        return Err(GraphError::NotSymmetric);
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    if (m - m.transpose()).amax() > 1e-10 * scale {
        return Err(GraphError::NotSymmetric);
    }
    let vals = sym_eigenvalues(m);
    let lambda_max = vals.last().copied().unwrap_or(0.0);
    if lambda_max <= 0.0 {
        return Err(GraphError::ZeroMatrix);
    }
    let cut = tol_zero * lambda_max;
    let zero_multiplicity = vals.iter().filter(|v| **v <= cut).count();
    let sigma_min_nonzero = vals.iter().copied().find(|v| *v > cut).ok_or(GraphError::ZeroMatrix)?;
    Ok(SpectralInfo {
        sigma_min_nonzero,
        lambda_max,
        zero_multiplicity,
        tol_zero,
    })
}

/// `½ D⁻¹ (L₊ − L₋)`.
pub fn mixing_matrix(g: &Graph) -> Result<DMatrix<f64>, GraphError> {
    let inc = incidence(g);
    if let Some(i) = inc.degrees.iter().position(|&d| d == 0) {
        return Err(GraphError::IsolatedNode(i));
    }
    let diff = &inc.laplacian_signless - &inc.laplacian_signed;
    let mut w = diff;
    for (i, &d) in inc.degrees.iter().enumerate() {
        w.row_mut(i).scale_mut(0.5 / d as f64);
    }
    Ok(w)
}

/// `½ (D + ½I)⁻¹ (L₊ − L₋ + I)`.
pub fn mixing_matrix_ip(g: &Graph) -> DMatrix<f64> {
    let inc = incidence(g);
    let n = g.n_nodes();
    let mut w = &inc.laplacian_signless - &inc.laplacian_signed + DMatrix::identity(n, n);
    for (i, &d) in inc.degrees.iter().enumerate() {
        w.row_mut(i).scale_mut(0.5 / (d as f64 + 0.5));
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mat(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, v)
    }

    #[test]
    fn builds_and_validates() {
        let p2 = Graph::new(2, &[(1, 0)]).unwrap();
        assert_eq!(p2.n_edges(), 1);
        let tri = Graph::new(3, &[(0, 1), (2, 0), (2, 1)]).unwrap();
        assert_eq!(tri.edges(), &[(1, 0), (2, 0), (2, 1)]);
        assert_eq!(Graph::new(3, &[(1, 1)]), Err(GraphError::SelfLoop(1)));
        assert_eq!(Graph::new(3, &[(1, 0), (0, 1)]), Err(GraphError::DuplicateEdge(1, 0)));
        assert!(matches!(Graph::new(2, &[(2, 0)]), Err(GraphError::OutOfRange(..))));
    }

    #[test]
    fn path2_incidence() {
        let inc = incidence(&Graph::path(2).unwrap());
        // edge (1,0): +1 at column 1, −1 at column 0
        assert_eq!(inc.signed, mat(1, 2, &[-1.0, 1.0]));
        assert_eq!(inc.laplacian_signed, mat(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        assert_eq!(inc.laplacian_signless, mat(2, 2, &[1.0, 1.0, 1.0, 1.0]));
        assert_eq!(inc.degrees, vec![1, 1]);
    }

    #[test]
    fn triangle_laplacians() {
        let inc = incidence(&Graph::complete(3).unwrap());
        assert_eq!(
            inc.laplacian_signed,
            mat(3, 3, &[2.0, -1.0, -1.0, -1.0, 2.0, -1.0, -1.0, -1.0, 2.0])
        );
        assert_eq!(
            inc.laplacian_signless,
            mat(3, 3, &[2.0, 1.0, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0, 2.0])
        );
    }

    #[test]
    fn spectra() {
        let p2 = incidence(&Graph::path(2).unwrap());
        let s = spectral_info(&p2.laplacian_signed, DEFAULT_TOL_ZERO).unwrap();
        assert!((s.sigma_min_nonzero - 2.0).abs() < 1e-12);
        assert!((s.lambda_max - 2.0).abs() < 1e-12);
        let tri = incidence(&Graph::complete(3).unwrap());
        let s = spectral_info(&tri.laplacian_signed, DEFAULT_TOL_ZERO).unwrap();
        assert!((s.sigma_min_nonzero - 3.0).abs() < 1e-12);
        assert_eq!(s.zero_multiplicity, 1);
        let s = spectral_info(&DMatrix::identity(3, 3), DEFAULT_TOL_ZERO).unwrap();
        assert_eq!((s.sigma_min_nonzero, s.lambda_max), (1.0, 1.0));
        assert_eq!(
            spectral_info(&DMatrix::zeros(2, 2), DEFAULT_TOL_ZERO),
            Err(GraphError::ZeroMatrix)
        );
    }

    #[test]
    fn disconnected_zero_multiplicity() {
        let g = Graph::new(4, &[(1, 0), (3, 2)]).unwrap();
        assert_eq!(g.n_components(), 2);
        let inc = incidence(&g);
        let s = spectral_info(&inc.laplacian_signed, DEFAULT_TOL_ZERO).unwrap();
        assert_eq!(s.zero_multiplicity, 2);
        assert!((s.sigma_min_nonzero - 2.0).abs() < 1e-12);
    }

    #[test]
    fn mixing_examples() {
        let w = mixing_matrix(&Graph::path(2).unwrap()).unwrap();
        assert_eq!(w, mat(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        let w = mixing_matrix(&Graph::complete(3).unwrap()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 0.0 } else { 0.5 };
                assert!((w[(i, j)] - want).abs() < 1e-15);
            }
        }
        let w = mixing_matrix_ip(&Graph::path(2).unwrap());
        let want = mat(2, 2, &[1.0, 2.0, 2.0, 1.0]) / 3.0;
        assert!((w - want).amax() < 1e-15);
        let w = mixing_matrix_ip(&Graph::complete(3).unwrap());
        assert!((w[(0, 0)] - 0.2).abs() < 1e-15 && (w[(0, 1)] - 0.4).abs() < 1e-15);
        assert_eq!(
            mixing_matrix(&Graph::new(3, &[(1, 0)]).unwrap()),
            Err(GraphError::IsolatedNode(2))
        );
    }

    #[test]
    fn edge_list_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = Graph::erdos_renyi(10, 0.5, &mut rng).unwrap();
        assert!(g.is_connected());
        let back = Graph::parse_edge_list(&g.to_edge_list()).unwrap();
        assert_eq!(g, back);
        assert_eq!(Graph::path(4).unwrap().edges(), &[(1, 0), (2, 1), (3, 2)]);
        assert!(Graph::parse_edge_list("3 2\n1 0\n").is_err());
    }
}
