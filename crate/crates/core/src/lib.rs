//! Adaptive stochastic mirror descent for non-smooth convex minimization over
//! the probability simplex with a convex functional constraint.
//!
//! The crate is organized around the pieces of the method:
//!
//! * [`geometry`]: proximal setups (norms, distance generating functions,
//!   Bregman divergences, prox maps).
//! * [`oracle`]: stochastic first-order oracles.
//! * [`solver`]: the adaptive method, the fixed-stepsize baseline and
//!   step-level diagnostics.
//! * [`problems`]: instances, a generator, the JSON file format and a
//!   brute-force reference optimum.
//! * [`validate`]: property sweeps reused by tests and the CLI.

pub mod error;
pub mod format;
pub mod geometry;
pub mod oracle;
pub mod problems;
pub mod solver;
pub mod validate;

pub use error::{Error, Result};
pub use geometry::{DualVector, Geometry, GeometryKind, Point};
pub use oracle::{
    FirstOrderOracle, LinearObjective, MaxLinearConstraint, Objective, OracleMode, OracleSample,
    QuadraticObjective, RngStream, SampleKind, SparseVector,
};
pub use problems::{
    generate_quadratic, load_problem, reference_optimum, save_problem, GeneratorParams, ProblemInstance,
    ReferenceOptimum,
};
pub use solver::{
    solve, solve_adaptive, solve_fixed, worst_case_iterations, IterationRecord, Problem, RunResult,
    SolverConfig, StopReason, Variant,
};
