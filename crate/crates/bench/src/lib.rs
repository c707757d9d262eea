//! Workloads shared by the criterion benchmarks.

use smd_core::{generate_quadratic, GeneratorParams, GeometryKind, OracleMode, ProblemInstance};

/// A random instance of dimension `n` with ten sparse constraints.
pub fn instance(n: usize, geometry: GeometryKind, oracle: OracleMode) -> ProblemInstance {
    generate_quadratic(&GeneratorParams { n, m_count: 10, density: 0.1, margin: 0.05, seed: 1, geometry, oracle })
        .expect("benchmark parameters are valid")
}
