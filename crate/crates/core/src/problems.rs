//! Problem instances: `min ½<x, Ax>` (or a linear objective) over the simplex
//! subject to `max_m <c_m, x> <= 0`, plus a generator, a JSON file format and a
//! brute-force grid reference for small `n`.

use std::path::Path;

use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::to_json_string;
use crate::geometry::{DualVector, Geometry, GeometryKind, Point};
use crate::oracle::{
    FirstOrderOracle, LinearObjective, MatrixStorage, MaxLinearConstraint, Objective, OracleMode,
    QuadraticObjective, RngStream, SparseVector,
};
use crate::solver::Problem;

/// A complete, validated problem.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    name: String,
    objective: Objective,
    constraint: MaxLinearConstraint,
    geometry: Geometry,
    oracle_mode: OracleMode,
    witness: Point,
    margin: f64,
}

impl ProblemInstance {
    /// Validates dimensions and the stored witness (`g(witness) <= 0`).
    pub fn new(
        name: impl Into<String>,
        objective: Objective,
        constraint: MaxLinearConstraint,
        geometry_kind: GeometryKind,
        oracle_mode: OracleMode,
        witness: Point,
        margin: f64,
    ) -> Result<Self> {
        let n = objective.dimension();
        if n == 0 {
            return Err(Error::Validation("dimension must be positive".into()));
        }
        if constraint.dimension() != n {
            return Err(Error::Validation(format!(
                "objective has dimension {n} but constraints have {}",
                constraint.dimension()
            )));
        }
        if witness.dim() != n {
            return Err(Error::Validation(format!("witness has length {} but n = {n}", witness.dim())));
        }
        if !margin.is_finite() {
            return Err(Error::Validation("margin must be finite".into()));
        }
        let geometry = Geometry::new(geometry_kind, n)?;
        geometry
            .check_point(&witness)
            .map_err(|e| Error::Validation(format!("witness: {e}")))?;
        let g = constraint.value(&witness)?;
        if g > 0.0 {
            return Err(Error::Validation(format!("witness violates the constraint: g(witness) = {g}")));
        }
        Ok(Self { name: name.into(), objective, constraint, geometry, oracle_mode, witness, margin })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn constraint(&self) -> &MaxLinearConstraint {
        &self.constraint
    }

    pub fn oracle_mode(&self) -> OracleMode {
        self.oracle_mode
    }

    pub fn witness(&self) -> &Point {
        &self.witness
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn with_oracle_mode(mut self, mode: OracleMode) -> Self {
        self.oracle_mode = mode;
        self
    }

    pub fn with_geometry(mut self, geometry: Geometry) -> Result<Self> {
        if geometry.dimension() != self.dimension() {
            return Err(Error::DimensionMismatch { expected: self.dimension(), found: geometry.dimension() });
        }
        self.geometry = geometry;
        Ok(self)
    }

    /// Exact `f(x)`.
    pub fn f(&self, x: &[f64]) -> Result<f64> {
        self.objective.value(x)
    }

    /// Exact `g(x)`.
    pub fn g(&self, x: &[f64]) -> Result<f64> {
        self.constraint.value(x)
    }

    /// A bound on the dual norm of every sample either oracle can return.
    pub fn uniform_subgradient_bound(&self) -> Result<f64> {
        Ok(self
            .objective
            .subgradient_bound(&self.geometry)?
            .max(self.constraint.subgradient_bound(&self.geometry)?))
    }
}

impl FirstOrderOracle for ProblemInstance {
    fn dimension(&self) -> usize {
        self.objective.dimension()
    }

    fn constraint_value(&self, x: &[f64]) -> Result<f64> {
        self.constraint.value(x)
    }

    fn objective_sample(&self, x: &[f64], rng: &mut RngStream) -> Result<DualVector> {
        self.objective.sample_gradient(x, self.oracle_mode, rng)
    }

    fn constraint_sample(&self, x: &[f64], _rng: &mut RngStream) -> Result<DualVector> {
        self.constraint.subgradient(x)
    }

    fn objective_value(&self, x: &[f64]) -> Option<f64> {
        self.objective.value(x).ok()
    }

    fn is_deterministic(&self) -> bool {
        self.oracle_mode == OracleMode::Exact || matches!(self.objective, Objective::Linear(_))
    }
}

impl Problem for ProblemInstance {
    fn geometry(&self) -> &Geometry {
        &self.geometry
    }
}

/// Parameters of the random quadratic family.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorParams {
    pub n: usize,
    pub m_count: usize,
    /// Probability that an entry of `B` or of `ĉ_m` is nonzero.
    pub density: f64,
    pub margin: f64,
    pub seed: u64,
    pub geometry: GeometryKind,
    pub oracle: OracleMode,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            n: 50,
            m_count: 10,
            density: 0.1,
            margin: 0.05,
            seed: 0,
            geometry: GeometryKind::EntropySimplex,
            oracle: OracleMode::Column,
        }
    }
}

/// Draws a random instance.
///
/// `A = ½(B + Bᵀ)` with `B` standard normal masked to `density`; sparse
/// `ĉ_m` drawn the same way; a witness `w` uniform on the simplex; and
/// offsets `b_m = <ĉ_m, w> + margin`, so that `g(w) = -margin` on the simplex.
/// `A` is stored as triplets when `density < 1`.
pub fn generate_quadratic(params: &GeneratorParams) -> Result<ProblemInstance> {
    let GeneratorParams { n, m_count, density, margin, seed, geometry, oracle } = *params;
    if n < 2 {
        return Err(Error::InvalidArgument(format!("n must be at least 2, got {n}")));
    }
    if m_count < 1 {
        return Err(Error::InvalidArgument("need at least one constraint".into()));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidArgument(format!("density must lie in (0, 1], got {density}")));
    }
    if !(margin.is_finite() && margin > 0.0) {
        return Err(Error::InvalidArgument(format!("margin must be positive, got {margin}")));
    }
    let mut rng = RngStream::new(seed);
    let masked_normal = |rng: &mut RngStream| {
        if rng.uniform() < density {
            StandardNormal.sample(rng)
        } else {
            0.0
        }
    };

    let b: Vec<f64> = (0..n * n).map(|_| masked_normal(&mut rng)).collect();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = 0.5 * (b[i * n + j] + b[j * n + i]);
        }
    }
    let quadratic = if density < 1.0 {
        let triplets: Vec<(usize, usize, f64)> = (0..n * n)
            .filter(|&p| a[p] != 0.0)
            .map(|p| (p / n, p % n, a[p]))
            .collect();
        QuadraticObjective::from_triplets(n, &triplets)?
    } else {
        QuadraticObjective::dense(n, a)?
    };

    let raw: Vec<SparseVector> = (0..m_count)
        .map(|_| {
            let dense: Vec<f64> = (0..n).map(|_| masked_normal(&mut rng)).collect();
            SparseVector::from_dense(&dense)
        })
        .collect();

    let exps: Vec<f64> = (0..n).map(|_| Exp1.sample(&mut rng)).collect();
    let total: f64 = exps.iter().sum();
    let witness: Vec<f64> = exps.iter().map(|e| e / total).collect();

    let offsets: Vec<f64> = raw.iter().map(|c| c.dot(&witness) + margin).collect();
    let constraint = MaxLinearConstraint::new(n, raw, offsets)?;

    ProblemInstance::new(
        format!("quadratic-n{n}-m{m_count}-seed{seed}"),
        Objective::Quadratic(quadratic),
        constraint,
        geometry,
        oracle,
        Point::from(witness),
        margin,
    )
}

/// Grid resolution used by default for [`reference_optimum`].
pub fn default_resolution(n: usize) -> f64 {
    if n <= 3 {
        1e-3
    } else {
        1e-2
    }
}

/// Best feasible point found by [`reference_optimum`].
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceOptimum {
    pub f_star: f64,
    pub x_star: Point,
}

/// Exhaustive search over the simplex grid `{x : K·x ∈ ℕⁿ, Σx = 1}`,
/// `K = round(1/resolution)`, keeping points with `g(x) <= 0`.
pub fn reference_optimum(p: &ProblemInstance, resolution: f64) -> Result<ReferenceOptimum> {
    let n = p.dimension();
    if n > 4 {
        return Err(Error::InvalidArgument(format!("grid search supports n <= 4, got {n}")));
    }
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(Error::InvalidArgument(format!("resolution must lie in (0, 1], got {resolution}")));
    }
    let steps = (1.0 / resolution).round().max(1.0) as usize;
    let scale = steps as f64;
    let mut counts = vec![0usize; n];
    let mut x = vec![0.0; n];
    let mut best: Option<(f64, Vec<f64>)> = None;

    // odometer over compositions of `steps` into n parts
    loop {
        let used: usize = counts[..n - 1].iter().sum();
        if used <= steps {
            counts[n - 1] = steps - used;
            for (xi, &c) in x.iter_mut().zip(&counts) {
                *xi = c as f64 / scale;
            }
            if p.g(&x)? <= 0.0 {
                let f = p.f(&x)?;
                if best.as_ref().is_none_or(|(b, _)| f < *b) {
                    best = Some((f, x.clone()));
                }
            }
        }
        let mut pos = 0;
        loop {
            if pos == n - 1 {
                return best
                    .map(|(f_star, x)| ReferenceOptimum { f_star, x_star: Point::from(x) })
                    .ok_or(Error::NoFeasibleGridPoint { resolution });
            }
            counts[pos] += 1;
            if counts[..n - 1].iter().sum::<usize>() <= steps {
                break;
            }
            counts[pos] = 0;
            pos += 1;
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    name: String,
    n: usize,
    objective: ObjectiveFile,
    constraints: ConstraintsFile,
    geometry: GeometryKind,
    oracle: OracleMode,
    witness: Vec<f64>,
    margin: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum ObjectiveFile {
    Quadratic {
        #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
        a: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        triplets: Option<Vec<(usize, usize, f64)>>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        symmetrized: bool,
    },
    Linear {
        c: Vec<f64>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintsFile {
    sparse: Vec<SparseVector>,
    offsets: Vec<f64>,
}

impl From<&ProblemInstance> for InstanceFile {
    fn from(p: &ProblemInstance) -> Self {
        let n = p.dimension();
        let objective = match &p.objective {
            Objective::Quadratic(q) => match q.storage() {
                MatrixStorage::Dense(a) => ObjectiveFile::Quadratic {
                    a: Some(a.chunks_exact(n).map(<[f64]>::to_vec).collect()),
                    triplets: None,
                    symmetrized: q.was_symmetrized(),
                },
                MatrixStorage::Triplets(t) => ObjectiveFile::Quadratic {
                    a: None,
                    triplets: Some(t.clone()),
                    symmetrized: q.was_symmetrized(),
                },
            },
            Objective::Linear(l) => ObjectiveFile::Linear { c: l.coefficients().to_vec() },
        };
        InstanceFile {
            name: p.name.clone(),
            n,
            objective,
            constraints: ConstraintsFile {
                sparse: p.constraint.rows().to_vec(),
                offsets: p.constraint.offsets().to_vec(),
            },
            geometry: p.geometry.kind(),
            oracle: p.oracle_mode,
            witness: p.witness.to_vec(),
            margin: p.margin,
        }
    }
}

impl TryFrom<InstanceFile> for ProblemInstance {
    type Error = Error;

    fn try_from(file: InstanceFile) -> Result<Self> {
        let n = file.n;
        if n == 0 {
            return Err(Error::Validation("n must be positive".into()));
        }
        let objective = match file.objective {
            ObjectiveFile::Quadratic { a: Some(rows), triplets: None, symmetrized } => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::Validation(format!("objective.A must be {n} x {n}")));
                }
                let mut q = QuadraticObjective::from_rows(&rows)?;
                q.mark_symmetrized(symmetrized);
                Objective::Quadratic(q)
            }
            ObjectiveFile::Quadratic { a: None, triplets: Some(t), symmetrized } => {
                let mut q = QuadraticObjective::from_triplets(n, &t)?;
                q.mark_symmetrized(symmetrized);
                Objective::Quadratic(q)
            }
            ObjectiveFile::Quadratic { .. } => {
                return Err(Error::Validation("quadratic objective needs exactly one of `A` or `triplets`".into()))
            }
            ObjectiveFile::Linear { c } => {
                if c.len() != n {
                    return Err(Error::Validation(format!("objective.c has length {} but n = {n}", c.len())));
                }
                Objective::Linear(LinearObjective::new(c)?)
            }
        };
        let constraint = MaxLinearConstraint::new(n, file.constraints.sparse, file.constraints.offsets)?;
        ProblemInstance::new(
            file.name,
            objective,
            constraint,
            file.geometry,
            file.oracle,
            Point::from(file.witness),
            file.margin,
        )
    }
}

/// JSON text of an instance.
pub fn problem_to_json(p: &ProblemInstance) -> String {
    to_json_string(&InstanceFile::from(p)).expect("instance serialization cannot fail")
}

/// Parses and validates an instance.
pub fn problem_from_json(text: &str) -> Result<ProblemInstance> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: InstanceFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Parse { field: path, message: e.into_inner().to_string() }
    })?;
    ProblemInstance::try_from(file)
}

pub fn save_problem(p: &ProblemInstance, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, problem_to_json(p))?;
    Ok(())
}

pub fn load_problem(path: impl AsRef<Path>) -> Result<ProblemInstance> {
    problem_from_json(&std::fs::read_to_string(path)?)
}

/// Small hand-built instances used by tests, validation and benchmarks.
pub mod fixtures {
    use super::*;

    /// `f(x) = x₂`, `g ≡ -1` on the 2-simplex; optimum `e₁` with `f* = 0`.
    pub fn linear_slack(geometry: GeometryKind) -> ProblemInstance {
        ProblemInstance::new(
            "linear-slack",
            Objective::Linear(LinearObjective::new(vec![0.0, 1.0]).unwrap()),
            MaxLinearConstraint::from_dense(&[vec![-1.0, -1.0]]).unwrap(),
            geometry,
            OracleMode::Exact,
            Point::from(vec![0.5, 0.5]),
            1.0,
        )
        .unwrap()
    }

    /// `f(x) = ½<x, Ax>` with `A = [[0, 2], [2, 0]]`, `g ≡ -1`.
    pub fn swap_quadratic(oracle: OracleMode) -> ProblemInstance {
        ProblemInstance::new(
            "swap-quadratic",
            Objective::Quadratic(QuadraticObjective::from_rows(&[vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap()),
            MaxLinearConstraint::from_dense(&[vec![-1.0, -1.0]]).unwrap(),
            GeometryKind::EntropySimplex,
            oracle,
            Point::from(vec![0.5, 0.5]),
            1.0,
        )
        .unwrap()
    }

    /// Generator parameters of the shipped three-dimensional quadratic
    /// fixture (`fixtures/quadratic_n3.json`).
    pub fn quadratic_n3_params() -> GeneratorParams {
        GeneratorParams {
            n: 3,
            m_count: 3,
            density: 1.0,
            margin: 0.05,
            seed: QUADRATIC_N3_SEED,
            geometry: GeometryKind::EntropySimplex,
            oracle: OracleMode::Exact,
        }
    }

    /// Picked so that `A` is positive semidefinite on `{v : Σv = 0}`, which
    /// makes `f` convex on the simplex; most seeds give an indefinite `A`.
    pub const QUADRATIC_N3_SEED: u64 = 45;

    /// The shipped three-dimensional quadratic fixture.
    pub fn quadratic_n3() -> ProblemInstance {
        generate_quadratic(&quadratic_n3_params()).expect("fixture parameters are valid")
    }
}
