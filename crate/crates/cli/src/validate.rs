use anyhow::Context;

use smd_core::problems::{default_resolution, fixtures};
use smd_core::validate::{
    one_step_sweep, partial_sum_sweep, random_feasible_points, random_simplex_point, telescoping_check,
    unbiasedness_sweep, PropertyReport,
};
use smd_core::{
    generate_quadratic, load_problem, reference_optimum, solve_adaptive, FirstOrderOracle, GeneratorParams, Geometry,
    GeometryKind, Objective, OracleMode, Point, Problem, ProblemInstance, RngStream, SolverConfig,
};

use crate::{usage, Common, Suite, ValidateArgs, EXIT_OK, EXIT_PROPERTY_FAILED};

/// Deviations larger than this many standard errors fail the unbiasedness suite.
pub const Z_BOUND: f64 = 4.0;
const REFERENCE_POINTS: usize = 10;

fn deterministic_problems(extra: Option<&ProblemInstance>) -> anyhow::Result<Vec<ProblemInstance>> {
    let n3 = fixtures::quadratic_n3();
    let mut out = vec![
        fixtures::linear_slack(GeometryKind::EntropySimplex),
        fixtures::linear_slack(GeometryKind::EuclideanSimplex),
        n3.clone().with_geometry(Geometry::euclidean(3)?)?,
        n3,
    ];
    if let Some(p) = extra {
        out.push(p.clone().with_oracle_mode(OracleMode::Exact));
    }
    Ok(out)
}

pub fn unbiasedness(samples: usize, seed: u64, extra: Option<&ProblemInstance>) -> anyhow::Result<Vec<PropertyReport>> {
    let mut reports = Vec::new();
    let swap = fixtures::swap_quadratic(OracleMode::Column);
    let mut named = vec![(swap.objective().clone(), vec![Point::from(vec![0.5, 0.5])])];

    let random = generate_quadratic(&GeneratorParams { n: 20, m_count: 1, density: 1.0, seed, ..Default::default() })?;
    let mut rng = RngStream::new(seed);
    let points = (0..5).map(|_| random_simplex_point(20, &mut rng)).collect();
    named.push((random.objective().clone(), points));

    if let Some(p) = extra {
        let points = (0..5).map(|_| random_simplex_point(p.dimension(), &mut rng)).collect();
        named.push((p.objective().clone(), points));
    }
    for (i, (objective, points)) in named.into_iter().enumerate() {
        if let Objective::Quadratic(q) = objective {
            let mut r = unbiasedness_sweep(&q, &points, samples, seed.wrapping_add(i as u64), Z_BOUND)?;
            r.name = format!("unbiasedness[n={}]", q.dimension());
            reports.push(r);
        }
    }
    Ok(reports)
}

pub fn one_step(epsilon: f64, seed: u64, extra: Option<&ProblemInstance>) -> anyhow::Result<Vec<PropertyReport>> {
    let mut reports = Vec::new();
    for p in deterministic_problems(extra)? {
        let refs = random_feasible_points(&p, REFERENCE_POINTS, seed)?;
        let (mut report, _) = one_step_sweep(&p, &SolverConfig::adaptive(epsilon), &refs)?;
        report.name = format!("one-step[{}, {}]", p.name(), p.geometry().kind());
        reports.push(report);
    }
    Ok(reports)
}

pub fn telescoping(epsilon: f64, extra: Option<&ProblemInstance>) -> anyhow::Result<Vec<PropertyReport>> {
    let mut reports = Vec::new();
    for p in deterministic_problems(extra)? {
        if p.dimension() > 4 {
            continue;
        }
        let reference = reference_optimum(&p, default_resolution(p.dimension()))?;
        let mut config = SolverConfig::adaptive(epsilon);
        config.record_trace = true;
        let run = solve_adaptive(&p, &config)?;
        let mut report = telescoping_check(&p, &run, &reference.x_star)?;
        report.name = format!("telescoping[{}, {}]", p.name(), p.geometry().kind());
        reports.push(report);
    }
    Ok(reports)
}

pub fn run(common: &Common, args: &ValidateArgs) -> anyhow::Result<i32> {
    if args.samples < 100 {
        return Err(usage("--samples must be at least 100"));
    }
    let extra = match &args.problem {
        Some(path) => Some(load_problem(path).with_context(|| format!("loading {}", path.display()))?),
        None => None,
    };
    let wants = |s: Suite| args.suite == Suite::All || args.suite == s;
    let mut reports = Vec::new();
    if wants(Suite::Unbiasedness) {
        reports.extend(unbiasedness(args.samples, common.seed, extra.as_ref())?);
    }
    if wants(Suite::PartialSum) {
        reports.push(partial_sum_sweep(args.sequences, common.seed));
    }
    if wants(Suite::OneStep) {
        reports.extend(one_step(common.epsilon, common.seed, extra.as_ref())?);
    }
    if wants(Suite::Telescoping) {
        reports.extend(telescoping(common.epsilon, extra.as_ref())?);
    }
    for r in &reports {
        println!("{r}");
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    println!("{} of {} properties passed", reports.len() - failed, reports.len());
    Ok(if failed == 0 { EXIT_OK } else { EXIT_PROPERTY_FAILED })
}
