use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, ensure, Context, Result};
use nalgebra::{DMatrix, DVector};
use proxpda::problem::{quadratic_shift_delta, ComponentSum, QuadraticObjective, SeparableObjective};
use proxpda::{
    ComponentKind, ConsensusProblem, ConstraintSystem, Graph, MfProblem, Regularizer, ScalarComponent, SmoothObjective,
    Variant,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub problem: ProblemSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Consensus,
    Generic,
    MatrixFactorization,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub kind: ProblemKind,
    #[serde(default)]
    pub seed: u64,
    /// Per-node dimension of a consensus problem.
    #[serde(default = "one")]
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSource>,
    /// One entry per node (consensus) or per coordinate (generic); a single
    /// entry is shared by all.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub functions: Vec<FunctionEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generic: Option<GenericSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mf: Option<MfSection>,
}

/// Exactly one of `generator` (`path(4)`, `erdos_renyi(10, 0.5)`, ...) and
/// `file` (edge list, relative to the config file).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionEntry {
    pub components: Vec<ComponentEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentEntry {
    #[serde(flatten)]
    pub kind: ComponentKind,
    #[serde(default)]
    pub shift: f64,
    #[serde(default = "unit")]
    pub weight: f64,
}

/// `min f(x) s.t. Ax = b` with explicit data.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenericSection {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    /// `BᵀB`; defaults to `(λ_max(AᵀA)+1)I − AᵀA`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proximal: Option<Vec<Vec<f64>>>,
    /// `xᵀQx + gᵀx + c` instead of catalog functions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadratic: Option<QuadraticEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticEntry {
    pub q: Vec<Vec<f64>>,
    pub g: Vec<f64>,
    #[serde(default)]
    pub c: f64,
    /// Shift making `f + (δ/2)‖Ax−b‖²` bounded below; searched when absent
    /// and `Q` is indefinite.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

/// Factorization data: either an explicit `z` (`M×N`, one column per node)
/// or a planted rank-`rank` instance with `m` rows drawn from the seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MfSection {
    pub rank: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<Vec<Vec<f64>>>,
    pub gamma_reg: f64,
    pub tau: f64,
    #[serde(default)]
    pub regularizer: Regularizer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyMode {
    #[default]
    Fixed,
    Schedule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    #[default]
    Zeros,
    /// Uniform on `[-1, 1]`, drawn from the problem seed.
    Random,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_variant")]
    pub variant: Variant,
    #[serde(default)]
    pub penalty: PenaltyMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// Factorization only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    /// Factorization only: slack added to the bound on `c`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_exponent: Option<f64>,
    #[serde(default = "default_phi")]
    pub phi: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub init: Init,
    /// Run the node-local simulation instead of the centralized iteration.
    #[serde(default)]
    pub network: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        toml::from_str("").expect("solver defaults")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_trace")]
    pub trace: PathBuf,
    #[serde(default = "default_report")]
    pub report: PathBuf,
    #[serde(default)]
    pub per_node: bool,
    #[serde(default = "default_node_trace")]
    pub node_trace: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        toml::from_str("").expect("output defaults")
    }
}

fn one() -> usize {
    1
}
fn unit() -> f64 {
    1.0
}
fn default_variant() -> Variant {
    Variant::ProxPda
}
fn default_margin() -> f64 {
    proxpda::params::DEFAULT_MARGIN
}
fn default_phi() -> f64 {
    1e-8
}
fn default_max_iters() -> usize {
    10_000
}
fn default_trace() -> PathBuf {
    "trace.csv".into()
}
fn default_report() -> PathBuf {
    "summary.json".into()
}
fn default_node_trace() -> PathBuf {
    "nodes.csv".into()
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub max_iters: Option<usize>,
    pub phi: Option<f64>,
    pub variant: Option<Variant>,
}

/// A parsed config with the directory its relative paths resolve against.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: ExperimentConfig,
    pub base_dir: PathBuf,
}

impl Loaded {
    pub fn read(path: &Path, ov: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut config: ExperimentConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        ensure!(
            config.schema == SCHEMA_VERSION,
            "unsupported config schema {} (expected {SCHEMA_VERSION})",
            config.schema
        );
        if let Some(s) = ov.seed {
            config.problem.seed = s;
        }
        if let Some(m) = ov.max_iters {
            config.solver.max_iters = m;
        }
        if let Some(p) = ov.phi {
            config.solver.phi = p;
        }
        if let Some(v) = ov.variant {
            config.solver.variant = v;
        }
        ensure!(
            config.solver.phi >= 0.0,
            "phi must be nonnegative, got {}",
            config.solver.phi
        );
        ensure!(config.solver.max_iters > 0, "max_iters must be positive");
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Loaded { config, base_dir })
    }

    /// The effective config as `key = value` lines for trace headers.
    pub fn echo(&self) -> Vec<String> {
        let text = toml::to_string(&self.config).unwrap_or_default();
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(str::to_owned)
            .collect()
    }

    pub fn init_rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.config.problem.seed.wrapping_add(1))
    }

    pub fn graph(&self) -> Result<Graph> {
        let src = self
            .config
            .problem
            .graph
            .as_ref()
            .ok_or_else(|| anyhow!("problem.graph is required"))?;
        match (&src.generator, &src.file) {
            (Some(spec), None) => GraphSpec::parse(spec)?.build(self.config.problem.seed),
            (None, Some(file)) => {
                let path = self.base_dir.join(file);
                let text =
                    std::fs::read_to_string(&path).with_context(|| format!("reading graph file {}", path.display()))?;
                let g = Graph::parse_edge_list(&text).with_context(|| format!("parsing {}", path.display()))?;
                g.require_connected()?;
                Ok(g)
            }
            _ => bail!("problem.graph needs exactly one of `generator` and `file`"),
        }
    }

    /// Scalar catalog functions, expanded to `count` entries.
    fn scalar_functions(&self, count: usize) -> Result<Vec<ComponentSum>> {
        let fs = &self.config.problem.functions;
        ensure!(!fs.is_empty(), "problem.functions is empty");
        ensure!(
            fs.len() == 1 || fs.len() == count,
            "expected 1 or {count} function entries, got {}",
            fs.len()
        );
        let built = fs
            .iter()
            .map(|f| {
                let comps = f
                    .components
                    .iter()
                    .map(|c| ScalarComponent::new(c.kind, c.shift, c.weight))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(ComponentSum::new(comps)?)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((0..count)
            .map(|i| built[if built.len() == 1 { 0 } else { i }].clone())
            .collect())
    }

    pub fn consensus(&self) -> Result<ConsensusProblem> {
        let g = self.graph()?;
        let k = self.config.problem.dim;
        ensure!(k > 0, "problem.dim must be positive");
        let locals = self
            .scalar_functions(g.n_nodes())?
            .into_iter()
            .map(|f| -> Result<Arc<dyn SmoothObjective>> {
                let f: Arc<dyn SmoothObjective> = Arc::new(f);
                Ok(if k == 1 {
                    f
                } else {
                    Arc::new(SeparableObjective::replicate(f, k)?)
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ConsensusProblem::new(g, locals)?)
    }

    pub fn generic(&self) -> Result<GenericProblem> {
        let sec = self
            .config
            .problem
            .generic
            .as_ref()
            .ok_or_else(|| anyhow!("problem.generic is required for kind = \"generic\""))?;
        let a = matrix("problem.generic.a", &sec.a)?;
        let n = a.ncols();
        let cs = ConstraintSystem::new(a.clone(), DVector::from_vec(sec.b.clone()))?;
        let f: Arc<dyn SmoothObjective> = match &sec.quadratic {
            Some(q) => {
                let qm = matrix("problem.generic.quadratic.q", &q.q)?;
                let obj = QuadraticObjective::new(qm.clone(), DVector::from_vec(q.g.clone()), q.c)?;
                ensure!(
                    obj.dim() == n,
                    "quadratic has dimension {}, A has {n} columns",
                    obj.dim()
                );
                if obj.is_convex() && q.delta.is_none() {
                    Arc::new(obj)
                } else {
                    let delta = match q.delta {
                        Some(d) => d,
                        None => quadratic_shift_delta(&qm, &a, 1e8).ok_or_else(|| {
                            anyhow!("quadratic is not bounded below on the feasible set; no shift delta found")
                        })?,
                    };
                    let lb = if obj.is_convex() {
                        obj.lower_bound()
                    } else {
                        f64::NEG_INFINITY
                    };
                    Arc::new(obj.with_lower_bound(lb, delta))
                }
            }
            None => {
                let blocks = self
                    .scalar_functions(n)?
                    .into_iter()
                    .map(|f| Arc::new(f) as Arc<dyn SmoothObjective>)
                    .collect();
                Arc::new(SeparableObjective::new(blocks)?)
            }
        };
        let proximal = match &sec.proximal {
            Some(p) => {
                let m = matrix("problem.generic.proximal", p)?;
                ensure!(m.is_square() && m.nrows() == n, "proximal must be {n}×{n}");
                m
            }
            None => complementary_proximal(cs.ata()),
        };
        Ok(GenericProblem { f, cs, proximal })
    }

    pub fn mf(&self) -> Result<MfProblem> {
        let sec = self
            .config
            .problem
            .mf
            .as_ref()
            .ok_or_else(|| anyhow!("problem.mf is required for kind = \"matrix_factorization\""))?;
        let g = self.graph()?;
        let n = g.n_nodes();
        match (&sec.z, sec.m) {
            (Some(z), None) => {
                let z = matrix("problem.mf.z", z)?;
                ensure!(
                    z.ncols() == n,
                    "problem.mf.z needs one column per node ({n}), got {}",
                    z.ncols()
                );
                Ok(MfProblem::new(
                    z,
                    sec.rank,
                    sec.gamma_reg,
                    sec.tau,
                    vec![sec.regularizer; n],
                    g,
                )?)
            }
            (None, Some(m)) => {
                let (p, _, _) = MfProblem::planted(
                    m,
                    sec.rank,
                    g,
                    sec.gamma_reg,
                    sec.tau,
                    sec.regularizer,
                    self.config.problem.seed,
                )?;
                Ok(p)
            }
            _ => bail!("problem.mf needs exactly one of `z` and `m`"),
        }
    }
}

pub struct GenericProblem {
    pub f: Arc<dyn SmoothObjective>,
    pub cs: ConstraintSystem,
    pub proximal: DMatrix<f64>,
}

/// `(λ_max(AᵀA)+1)I − AᵀA`, so that `AᵀA + BᵀB = (λ_max+1)I`.
pub fn complementary_proximal(ata: &DMatrix<f64>) -> DMatrix<f64> {
    let n = ata.nrows();
    let lam = proxpda::linalg::sym_max_eigenvalue(ata);
    DMatrix::identity(n, n) * (lam + 1.0) - ata
}

fn matrix(what: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    ensure!(!rows.is_empty(), "{what} has no rows");
    let cols = rows[0].len();
    ensure!(cols > 0, "{what} has no columns");
    ensure!(rows.iter().all(|r| r.len() == cols), "{what} has ragged rows");
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

/// A graph generator such as `path(4)` or `erdos_renyi(10, 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphSpec {
    Path(usize),
    Cycle(usize),
    Complete(usize),
    ErdosRenyi(usize, f64),
}

impl GraphSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, rest) = s.split_once('(').ok_or_else(|| anyhow!("bad graph generator {s:?}"))?;
        let args = rest
            .strip_suffix(')')
            .ok_or_else(|| anyhow!("bad graph generator {s:?}"))?;
        let args: Vec<&str> = args.split(',').map(str::trim).collect();
        let size = |i: usize| -> Result<usize> {
            args.get(i)
                .ok_or_else(|| anyhow!("{s:?}: missing argument"))?
                .parse()
                .with_context(|| format!("{s:?}: bad node count"))
        };
        let arity = |k: usize| -> Result<()> {
            ensure!(args.len() == k, "{s:?}: expected {k} argument(s)");
            Ok(())
        };
        let spec = match name.trim().to_ascii_lowercase().as_str() {
            "path" => {
                arity(1)?;
                GraphSpec::Path(size(0)?)
            }
            "cycle" => {
                arity(1)?;
                GraphSpec::Cycle(size(0)?)
            }
            "complete" => {
                arity(1)?;
                GraphSpec::Complete(size(0)?)
            }
            "erdos_renyi" | "er" => {
                arity(2)?;
                let p = args[1]
                    .parse()
                    .with_context(|| format!("{s:?}: bad edge probability"))?;
                GraphSpec::ErdosRenyi(size(0)?, p)
            }
            other => bail!("unknown graph generator {other:?} (path, cycle, complete, erdos_renyi)"),
        };
        Ok(spec)
    }

    pub fn build(self, seed: u64) -> Result<Graph> {
        let g = match self {
            GraphSpec::Path(n) => Graph::path(n)?,
            GraphSpec::Cycle(n) => Graph::cycle(n)?,
            GraphSpec::Complete(n) => Graph::complete(n)?,
            GraphSpec::ErdosRenyi(n, p) => Graph::erdos_renyi(n, p, &mut ChaCha8Rng::seed_from_u64(seed))?,
        };
        Ok(g)
    }
}
