//! Property sweeps shared by the test suites and the `validate` command.

use rand::Rng;

use crate::error::Result;
use crate::geometry::Point;
use crate::oracle::{unbiasedness_report, FirstOrderOracle, QuadraticObjective, RngStream, SampleKind};
use crate::problems::ProblemInstance;
use crate::solver::{
    one_step_residual, partial_sum_gap, solve_adaptive_observed, solve_fixed_observed, telescoping_bound_check,
    Problem, RunResult, SolverConfig, StepView, Variant,
};

pub const PARTIAL_SUM_TOLERANCE: f64 = 1e-10;
pub const ONE_STEP_TOLERANCE: f64 = 1e-8;

/// Outcome of one property check.
#[derive(Clone, Debug, PartialEq)]
pub struct PropertyReport {
    pub name: String,
    pub passed: bool,
    /// The worst observed value of the checked quantity.
    pub measured: f64,
    /// The bound `measured` is compared against.
    pub threshold: f64,
    pub checked: usize,
}

impl std::fmt::Display for PropertyReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {}: worst {:.6e} vs {:.6e} over {} checks",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.threshold,
            self.checked
        )
    }
}

/// A uniform point on the simplex.
pub fn random_simplex_point(n: usize, rng: &mut RngStream) -> Point {
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.uniform()).ln()).collect();
    let total: f64 = e.iter().sum();
    Point::from(e.into_iter().map(|v| v / total).collect::<Vec<_>>())
}

/// A random non-negative sequence of length 1..=100 with magnitudes spread
/// log-uniformly over `[1e-6, 1e6]`; about one entry in ten is zero.
pub fn random_alpha(rng: &mut RngStream) -> Vec<f64> {
    let len = rng.random_range(1..=100);
    (0..len)
        .map(|_| if rng.uniform() < 0.1 { 0.0 } else { 10f64.powf(rng.random_range(-6.0..=6.0)) })
        .collect()
}

/// `partial_sum_gap >= -1e-10` over `count` random sequences.
pub fn partial_sum_sweep(count: usize, seed: u64) -> PropertyReport {
    let mut rng = RngStream::new(seed);
    let worst = (0..count).map(|_| partial_sum_gap(&random_alpha(&mut rng))).fold(f64::INFINITY, f64::min);
    PropertyReport {
        name: "partial-sum".into(),
        passed: worst >= -PARTIAL_SUM_TOLERANCE,
        measured: worst,
        threshold: -PARTIAL_SUM_TOLERANCE,
        checked: count,
    }
}

/// Column-sampling deviation in units of standard error at each point.
pub fn unbiasedness_sweep(
    q: &QuadraticObjective,
    points: &[Point],
    samples: usize,
    seed: u64,
    z_bound: f64,
) -> Result<PropertyReport> {
    let mut rng = RngStream::new(seed);
    let mut worst = 0.0_f64;
    for x in points {
        worst = worst.max(unbiasedness_report(q, x, samples, &mut rng)?.max_z_score());
    }
    Ok(PropertyReport {
        name: "unbiasedness".into(),
        passed: worst <= z_bound,
        measured: worst,
        threshold: z_bound,
        checked: points.len() * q.dimension(),
    })
}

/// Runs a deterministic solve of either variant and checks the one-step
/// inequality at every step against every reference point. Returns the run
/// as well.
pub fn one_step_sweep(
    problem: &ProblemInstance,
    config: &SolverConfig,
    references: &[Point],
) -> Result<(PropertyReport, RunResult)> {
    let geometry = *problem.geometry();
    let mut worst = f64::INFINITY;
    let mut checked = 0;
    let mut failure = None;
    let observer = |step: &StepView<'_>| {
        if !step.h.is_finite() || failure.is_some() {
            return;
        }
        for r in references {
            let gap = match step.which {
                SampleKind::Objective => problem.f(step.x).and_then(|a| Ok(a - problem.f(r)?)),
                SampleKind::Constraint => Ok(step.g_value - problem.g(r).unwrap_or(f64::NAN)),
            };
            let residual = gap.and_then(|gap| {
                one_step_residual(&geometry, step.x, step.x_next, r, step.gradient, step.h, gap)
            });
            match residual {
                Ok(v) => {
                    worst = worst.min(v);
                    checked += 1;
                }
                Err(e) => failure = Some(e),
            }
        }
    };
    let run = match config.variant {
        Variant::Adaptive => solve_adaptive_observed(problem, config, observer)?,
        Variant::Fixed => solve_fixed_observed(problem, config, observer)?,
    };
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((
        PropertyReport {
            name: format!("one-step[{}]", problem.name()),
            passed: worst >= -ONE_STEP_TOLERANCE,
            measured: worst,
            threshold: -ONE_STEP_TOLERANCE,
            checked,
        },
        run,
    ))
}

/// Telescoping certificate of a traced deterministic run; `measured` is
/// `lhs - rhs`.
pub fn telescoping_check(problem: &ProblemInstance, run: &RunResult, reference: &Point) -> Result<PropertyReport> {
    let report = telescoping_bound_check(&run.trace, problem.geometry(), problem, reference)?;
    Ok(PropertyReport {
        name: format!("telescoping[{}]", problem.name()),
        passed: report.holds,
        measured: report.lhs - report.rhs,
        threshold: 1e-8,
        checked: run.trace.len(),
    })
}

/// Random feasible reference points: the witness mixed with uniform simplex
/// points until the constraint holds.
pub fn random_feasible_points(problem: &ProblemInstance, count: usize, seed: u64) -> Result<Vec<Point>> {
    let mut rng = RngStream::new(seed);
    let n = problem.dimension();
    let w = problem.witness();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let y = random_simplex_point(n, &mut rng);
        let mut t = 1.0;
        loop {
            let z: Vec<f64> = y.iter().zip(w.iter()).map(|(a, b)| t * a + (1.0 - t) * b).collect();
            if problem.g(&z)? <= 0.0 {
                out.push(Point::from(z));
                break;
            }
            t *= 0.5;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GeometryKind;
    use crate::problems::fixtures;

    #[test]
    fn partial_sum_small_sweep_passes() {
        let r = partial_sum_sweep(500, 1);
        assert!(r.passed, "{r}");
    }

    #[test]
    fn feasible_points_are_feasible() {
        let p = fixtures::quadratic_n3();
        for x in random_feasible_points(&p, 25, 3).unwrap() {
            assert!(p.g(&x).unwrap() <= 0.0);
            p.geometry().check_point(&x).unwrap();
        }
    }

    #[test]
    fn one_step_on_linear_fixture() {
        let p = fixtures::linear_slack(GeometryKind::EntropySimplex);
        let refs = random_feasible_points(&p, 10, 9).unwrap();
        let (report, run) = one_step_sweep(&p, &SolverConfig::adaptive(0.05), &refs).unwrap();
        assert!(report.passed, "{report}");
        assert_eq!(report.checked as u64, 10 * run.iterations);
    }

    #[test]
    fn one_step_on_fixed_runs() {
        let p = fixtures::quadratic_n3();
        let refs = random_feasible_points(&p, 10, 4).unwrap();
        let bound = p.uniform_subgradient_bound().unwrap();
        let (report, run) = one_step_sweep(&p, &SolverConfig::fixed(0.1, bound), &refs).unwrap();
        assert!(report.passed, "{report}");
        assert_eq!(run.stop_reason, crate::solver::StopReason::BudgetExhausted);
    }
}
