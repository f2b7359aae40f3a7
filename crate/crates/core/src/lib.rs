//! Proximal primal-dual algorithms for smooth nonconvex problems with linear
//! equality constraints.
//!
//! The crate is organised around the problem `min f(x) s.t. Ax = b`:
//!
//! - [`graph`]: graphs, signed/signless incidence matrices, Laplacians,
//!   spectral quantities and mixing matrices.
//! - [`problem`]: smooth objectives (including a catalog of nonconvex scalar
//!   losses), constraint systems and gradient/Lipschitz audits.
//! - [`params`]: penalty and proximal coefficient bounds, increasing penalty
//!   schedules and inexactness schedules.
//! - [`solver`]: the exact, linearized, inexact and increasing-penalty
//!   proximal primal-dual iterations.
//! - [`diagnostics`]: augmented Lagrangian, potential functions, optimality
//!   gap, descent audits and rate certificates.
//! - [`consensus`]: node-local simulation of the distributed specializations
//!   and their centralized matrix-form counterparts.
//! - [`factorization`]: the distributed matrix factorization iteration.
//!
//! Data-parallel loops (node updates within a synchronous round, per-node
//! factorization solves, batches of independent runs) go through [`exec`],
//! which uses rayon when the `parallel` feature is enabled and falls back to
//! plain iteration otherwise.

pub mod consensus;
pub mod diagnostics;
pub mod exec;
pub mod factorization;
pub mod graph;
pub mod linalg;
pub mod params;
pub mod problem;
pub mod solver;

pub use consensus::{ConsensusError, ConsensusProblem, Network, NetworkVariant, NodeState};
pub use diagnostics::{ConvergenceTrace, IterationRecord, RateCertificate, Termination};
pub use exec::ExecMode;
pub use factorization::{MfError, MfProblem, MfState, Regularizer};
pub use graph::{Graph, GraphError, IncidenceMatrices, SpectralInfo};
pub use params::{ErrorSchedule, MfParams, ParamError, PenaltyParams, PenaltySchedule};
pub use problem::{ComponentKind, ConstraintSystem, ProblemError, ScalarComponent, SmoothObjective};
pub use solver::{Solver, SolverConfig, SolverError, SolverState, Variant};
