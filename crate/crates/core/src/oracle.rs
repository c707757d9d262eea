//! Stochastic first-order oracles.
//!
//! An oracle returns unbiased subgradient samples of the objective `f` and the
//! constraint `g`, plus the exact value `g(x)`. The concrete pieces here are
//! the quadratic objective `f(x) = ½<x, Ax>` with an exact gradient `Ax` or a
//! single-column estimate, a linear objective, and the max-linear constraint
//! `g(x) = max_m <c_m, x>`.

use std::collections::BTreeMap;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dot, DualVector, Geometry, FEASIBILITY_TOLERANCE};

/// Seeded random stream feeding oracle noise.
///
/// Identical seeds and identical query sequences give bit-identical samples.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, inner: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of 32-bit words consumed so far.
    pub fn position(&self) -> u128 {
        self.inner.get_word_pos()
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// How the oracle produces objective subgradients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    /// The exact gradient, no noise.
    Exact,
    /// One column of `A` drawn with probabilities `x`.
    Column,
}

impl OracleMode {
    pub fn as_str(self) -> &'static str {
        match self {
            OracleMode::Exact => "exact",
            OracleMode::Column => "column",
        }
    }
}

impl std::fmt::Display for OracleMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for OracleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" | "deterministic" => Ok(OracleMode::Exact),
            "column" | "column-sampling" => Ok(OracleMode::Column),
            other => Err(Error::InvalidArgument(format!("unknown oracle mode `{other}`"))),
        }
    }
}

/// Which function a sample belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleKind {
    Objective,
    Constraint,
}

/// One stochastic subgradient.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleSample {
    pub gradient: DualVector,
    pub which: SampleKind,
}

/// The first-order oracle contract consumed by the solver.
pub trait FirstOrderOracle {
    fn dimension(&self) -> usize;

    /// Exact constraint value `g(x)`.
    fn constraint_value(&self, x: &[f64]) -> Result<f64>;

    /// A sample `∇f(x, ξ)` with `E[∇f(x, ξ)] ∈ ∂f(x)`.
    fn objective_sample(&self, x: &[f64], rng: &mut RngStream) -> Result<DualVector>;

    /// A sample `∇g(x, ξ)` with `E[∇g(x, ξ)] ∈ ∂g(x)`.
    fn constraint_sample(&self, x: &[f64], rng: &mut RngStream) -> Result<DualVector>;

    /// Exact `f(x)` when the objective admits it. Diagnostics only.
    fn objective_value(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    /// True when every sample equals a true subgradient.
    fn is_deterministic(&self) -> bool;

    fn sample(&self, x: &[f64], which: SampleKind, rng: &mut RngStream) -> Result<OracleSample> {
        let gradient = match which {
            SampleKind::Objective => self.objective_sample(x, rng)?,
            SampleKind::Constraint => self.constraint_sample(x, rng)?,
        };
        Ok(OracleSample { gradient, which })
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Storage of a square matrix.
#[derive(Clone, Debug, PartialEq)]
pub enum MatrixStorage {
    /// Row-major `n × n` entries.
    Dense(Vec<f64>),
    /// Nonzero `(row, col, value)` triplets sorted column-major, without
    /// duplicates.
    Triplets(Vec<(usize, usize, f64)>),
}

/// `f(x) = ½<x, Ax>` with symmetric `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticObjective {
    n: usize,
    storage: MatrixStorage,
    // start offsets of each column inside `Triplets`
    col_ptr: Vec<usize>,
    symmetrized: bool,
}

impl QuadraticObjective {
    /// Builds from row-major dense entries, replacing `A` by `½(A + Aᵀ)` when
    /// it is not exactly symmetric.
    pub fn dense(n: usize, entries: Vec<f64>) -> Result<Self> {
        check_len(n * n, entries.len())?;
        if let Some(i) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: i });
        }
        let mut entries = entries;
        let mut symmetrized = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (entries[i * n + j], entries[j * n + i]);
                if a != b {
                    let s = 0.5 * (a + b);
                    entries[i * n + j] = s;
                    entries[j * n + i] = s;
                    symmetrized = true;
                }
            }
        }
        Ok(Self { n, storage: MatrixStorage::Dense(entries), col_ptr: Vec::new(), symmetrized })
    }

    /// Builds from dense rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            check_len(n, row.len())?;
            entries.extend_from_slice(row);
        }
        Self::dense(n, entries)
    }

    /// Builds from `(row, col, value)` triplets. Duplicates are summed, exact
    /// zeros dropped, and the matrix symmetrized when needed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut by_col: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (k, &(i, j, v)) in triplets.iter().enumerate() {
            if i >= n || j >= n {
                return Err(Error::Validation(format!(
                    "triplet {k} index ({i}, {j}) out of range for n = {n}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite { index: k });
            }
            *by_col.entry((j, i)).or_insert(0.0) += v;
        }
        let mut symmetrized = false;
        let mut sym = BTreeMap::new();
        for (&(j, i), &v) in &by_col {
            let mirror = by_col.get(&(i, j)).copied().unwrap_or(0.0);
            let value = if mirror == v {
                v
            } else {
                symmetrized = true;
                0.5 * (v + mirror)
            };
            sym.insert((j, i), value);
            if !by_col.contains_key(&(i, j)) {
                sym.insert((i, j), value);
            }
        }
        let entries: Vec<(usize, usize, f64)> =
            sym.into_iter().filter(|&(_, v)| v != 0.0).map(|((j, i), v)| (i, j, v)).collect();
        let mut col_ptr = vec![0; n + 1];
        for &(_, j, _) in &entries {
            col_ptr[j + 1] += 1;
        }
        for j in 0..n {
            col_ptr[j + 1] += col_ptr[j];
        }
        Ok(Self { n, storage: MatrixStorage::Triplets(entries), col_ptr, symmetrized })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn storage(&self) -> &MatrixStorage {
        &self.storage
    }

    /// Whether the constructor had to symmetrize the input.
    pub fn was_symmetrized(&self) -> bool {
        self.symmetrized
    }

    pub(crate) fn mark_symmetrized(&mut self, flag: bool) {
        self.symmetrized |= flag;
    }

    /// `f(x) = ½<x, Ax>`.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let ax = self.exact_gradient(x)?;
        Ok(0.5 * ax.dot(x))
    }

    /// `∇f(x) = Ax`.
    pub fn exact_gradient(&self, x: &[f64]) -> Result<DualVector> {
        check_len(self.n, x.len())?;
        let n = self.n;
        let out = match &self.storage {
            MatrixStorage::Dense(a) => {
                a.chunks_exact(n).map(|row| dot(row, x)).collect()
            }
            MatrixStorage::Triplets(t) => {
                let mut out = vec![0.0; n];
                for &(i, j, v) in t {
                    out[i] += v * x[j];
                }
                out
            }
        };
        Ok(DualVector::from(out))
    }

    /// Column `A⟨i⟩`.
    pub fn column(&self, i: usize) -> DualVector {
        let n = self.n;
        match &self.storage {
            MatrixStorage::Dense(a) => DualVector::from((0..n).map(|r| a[r * n + i]).collect::<Vec<_>>()),
            MatrixStorage::Triplets(t) => {
                let mut out = vec![0.0; n];
                for &(r, _, v) in &t[self.col_ptr[i]..self.col_ptr[i + 1]] {
                    out[r] = v;
                }
                DualVector::from(out)
            }
        }
    }

    /// Unbiased single-column estimate of `Ax`: draws `i` with probability
    /// `xᵢ` and returns `A⟨i⟩`. Cost `O(n)`.
    pub fn column_sample_gradient(&self, x: &[f64], rng: &mut RngStream) -> Result<DualVector> {
        check_len(self.n, x.len())?;
        let i = sample_index(x, rng)?;
        Ok(self.column(i))
    }

    /// `max_i ‖A⟨i⟩‖_*`, which bounds both the column samples and `‖Ax‖_*` on
    /// the simplex.
    pub fn max_column_dual_norm(&self, geometry: &Geometry) -> Result<f64> {
        (0..self.n).try_fold(0.0_f64, |m, i| Ok(m.max(geometry.dual_norm(&self.column(i))?)))
    }
}

/// Draws an index with probabilities proportional to the simplex point `x`.
///
/// Coordinates in `[-τ, 0)` are treated as zero; a single uniform draw is
/// mapped through the cumulative sums.
pub fn sample_index(x: &[f64], rng: &mut RngStream) -> Result<usize> {
    if let Some((i, v)) = x.iter().enumerate().find(|(_, &v)| v < -FEASIBILITY_TOLERANCE || !v.is_finite()) {
        return Err(Error::Infeasible(format!("coordinate {i} is {v}")));
    }
    let total: f64 = x.iter().map(|v| v.max(0.0)).sum();
    if total <= 0.0 {
        return Err(Error::DegenerateDistribution);
    }
    let target = rng.uniform() * total;
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (i, &v) in x.iter().enumerate() {
        if v > 0.0 {
            cumulative += v;
            last_positive = i;
            if target < cumulative {
                return Ok(i);
            }
        }
    }
    // target rounded up to the full mass
    Ok(last_positive)
}

/// `f(x) = <c, x>`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearObjective {
    coefficients: Vec<f64>,
}

impl LinearObjective {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if let Some(i) = coefficients.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: i });
        }
        Ok(Self { coefficients })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn dimension(&self) -> usize {
        self.coefficients.len()
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        check_len(self.coefficients.len(), x.len())?;
        Ok(dot(&self.coefficients, x))
    }

    pub fn gradient(&self) -> DualVector {
        DualVector::from(self.coefficients.clone())
    }
}

/// Objective of a problem instance.
#[derive(Clone, Debug, PartialEq)]
pub enum Objective {
    Quadratic(QuadraticObjective),
    Linear(LinearObjective),
}

impl Objective {
    pub fn dimension(&self) -> usize {
        match self {
            Objective::Quadratic(q) => q.dimension(),
            Objective::Linear(l) => l.dimension(),
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        match self {
            Objective::Quadratic(q) => q.value(x),
            Objective::Linear(l) => l.value(x),
        }
    }

    pub fn exact_gradient(&self, x: &[f64]) -> Result<DualVector> {
        match self {
            Objective::Quadratic(q) => q.exact_gradient(x),
            Objective::Linear(l) => {
                check_len(l.dimension(), x.len())?;
                Ok(l.gradient())
            }
        }
    }

    /// A gradient sample under `mode`. Linear objectives have no noise.
    pub fn sample_gradient(&self, x: &[f64], mode: OracleMode, rng: &mut RngStream) -> Result<DualVector> {
        match (self, mode) {
            (Objective::Quadratic(q), OracleMode::Column) => q.column_sample_gradient(x, rng),
            _ => self.exact_gradient(x),
        }
    }

    /// Uniform bound on `‖∇f(x, ξ)‖_*` over the simplex.
    pub fn subgradient_bound(&self, geometry: &Geometry) -> Result<f64> {
        match self {
            Objective::Quadratic(q) => q.max_column_dual_norm(geometry),
            Objective::Linear(l) => geometry.dual_norm(l.coefficients()),
        }
    }
}

/// A sparse vector given by parallel index and value lists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn from_dense(v: &[f64]) -> Self {
        let (indices, values) = v.iter().enumerate().filter(|(_, &a)| a != 0.0).map(|(i, &a)| (i, a)).unzip();
        Self { indices, values }
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.indices.iter().zip(&self.values).map(|(&i, v)| v * x[i]).sum()
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }
}

/// `g(x) = max_m (<ĉ_m, x> - b_m)`, i.e. `max_m <c_m, x>` on the simplex with
/// the dense `c_m = ĉ_m - b_m·𝟙`. The sparse part and the offsets are stored
/// separately so that `ĉ_m` stays sparse.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxLinearConstraint {
    n: usize,
    rows: Vec<SparseVector>,
    offsets: Vec<f64>,
}

impl MaxLinearConstraint {
    pub fn new(n: usize, rows: Vec<SparseVector>, offsets: Vec<f64>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Validation("constraint needs at least one vector".into()));
        }
        if rows.len() != offsets.len() {
            return Err(Error::Validation(format!(
                "{} constraint vectors but {} offsets",
                rows.len(),
                offsets.len()
            )));
        }
        for (m, row) in rows.iter().enumerate() {
            if row.indices.len() != row.values.len() {
                return Err(Error::Validation(format!(
                    "constraint {m}: {} indices but {} values",
                    row.indices.len(),
                    row.values.len()
                )));
            }
            if let Some(&i) = row.indices.iter().find(|&&i| i >= n) {
                return Err(Error::Validation(format!("constraint {m}: index {i} out of range for n = {n}")));
            }
            if row.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("constraint {m}: non-finite value")));
            }
        }
        if offsets.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite constraint offset".into()));
        }
        Ok(Self { n, rows, offsets })
    }

    /// Dense vectors with zero offsets.
    pub fn from_dense(vectors: &[Vec<f64>]) -> Result<Self> {
        let n = vectors.first().map_or(0, Vec::len);
        for v in vectors {
            check_len(n, v.len())?;
        }
        Self::new(n, vectors.iter().map(|v| SparseVector::from_dense(v)).collect(), vec![0.0; vectors.len()])
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn count(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[SparseVector] {
        &self.rows
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// Index of the maximizing functional, ties to the smallest index.
    pub fn active_index(&self, x: &[f64]) -> Result<usize> {
        check_len(self.n, x.len())?;
        let mut best = 0;
        let mut best_value = f64::NEG_INFINITY;
        for (m, (row, b)) in self.rows.iter().zip(&self.offsets).enumerate() {
            let v = row.dot(x) - b;
            if v > best_value {
                best = m;
                best_value = v;
            }
        }
        Ok(best)
    }

    /// Exact `g(x)`.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let m = self.active_index(x)?;
        Ok(self.rows[m].dot(x) - self.offsets[m])
    }

    /// Dense `c_m = ĉ_m - b_m·𝟙`.
    pub fn dense_row(&self, m: usize) -> DualVector {
        let mut out = vec![-self.offsets[m]; self.n];
        for (&i, v) in self.rows[m].indices.iter().zip(&self.rows[m].values) {
            out[i] += v;
        }
        DualVector::from(out)
    }

    /// A subgradient of `g` at `x`: the dense active vector.
    pub fn subgradient(&self, x: &[f64]) -> Result<DualVector> {
        Ok(self.dense_row(self.active_index(x)?))
    }

    /// The active vector in its sparse form `(ĉ_m, b_m)`.
    pub fn sparse_subgradient(&self, x: &[f64]) -> Result<(&SparseVector, f64)> {
        let m = self.active_index(x)?;
        Ok((&self.rows[m], self.offsets[m]))
    }

    /// `max_m ‖c_m‖_*`.
    pub fn subgradient_bound(&self, geometry: &Geometry) -> Result<f64> {
        (0..self.rows.len()).try_fold(0.0_f64, |acc, m| Ok(acc.max(geometry.dual_norm(&self.dense_row(m))?)))
    }
}

/// Empirical check of the column estimator against `Ax`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnbiasednessReport {
    pub empirical_mean: DualVector,
    pub reference: DualVector,
    pub max_abs_deviation: f64,
    /// Componentwise standard error of the empirical mean.
    pub stderr: Vec<f64>,
    pub samples: usize,
}

impl UnbiasednessReport {
    /// Largest `|mean - reference| / stderr` over components with nonzero
    /// standard error; zero-variance components must match exactly.
    pub fn max_z_score(&self) -> f64 {
        self.empirical_mean
            .iter()
            .zip(self.reference.iter())
            .zip(&self.stderr)
            .map(|((m, r), s)| {
                let dev = (m - r).abs();
                if *s > 0.0 {
                    dev / s
                } else if dev <= 1e-12 * r.abs().max(1.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }

    /// Whether every component lies within `k` standard errors.
    pub fn within(&self, k: f64) -> bool {
        self.max_z_score() <= k
    }
}

/// Draws `samples` column estimates at `x` and compares their mean with `Ax`.
pub fn unbiasedness_report(
    q: &QuadraticObjective,
    x: &[f64],
    samples: usize,
    rng: &mut RngStream,
) -> Result<UnbiasednessReport> {
    if samples < 100 {
        return Err(Error::InvalidArgument(format!("need at least 100 samples, got {samples}")));
    }
    let n = q.dimension();
    let reference = q.exact_gradient(x)?;
    // Welford accumulators
    let mut mean = vec![0.0; n];
    let mut m2 = vec![0.0; n];
    for t in 1..=samples {
        let s = q.column_sample_gradient(x, rng)?;
        for ((mu, acc), v) in mean.iter_mut().zip(m2.iter_mut()).zip(s.iter()) {
            let delta = v - *mu;
            *mu += delta / t as f64;
            *acc += delta * (v - *mu);
        }
    }
    let stderr: Vec<f64> = m2.iter().map(|a| (a / (samples - 1) as f64).sqrt() / (samples as f64).sqrt()).collect();
    let max_abs_deviation = mean.iter().zip(reference.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(UnbiasednessReport { empirical_mean: DualVector::from(mean), reference, max_abs_deviation, stderr, samples })
}
