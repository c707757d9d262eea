use anyhow::Context;

use smd_core::{load_problem, solve, FirstOrderOracle, ProblemInstance, RunResult, SolverConfig, StopReason, Variant};

use crate::output::{trace_csv, write_atomic, SolveReport};
use crate::{usage, Common, SolveArgs, EXIT_CAP_REACHED, EXIT_OK};

pub fn config(common: &Common, args: &SolveArgs) -> anyhow::Result<SolverConfig> {
    let variant = Variant::from(args.variant);
    let mut config = match (variant, args.fixed_m) {
        (Variant::Fixed, None) => return Err(usage("--variant fixed requires --fixed-M")),
        (_, Some(m)) if !(m.is_finite() && m > 0.0) => return Err(usage(format!("--fixed-M must be positive, got {m}"))),
        (Variant::Fixed, Some(m)) => SolverConfig::fixed(common.epsilon, m),
        (Variant::Adaptive, _) => SolverConfig::adaptive(common.epsilon),
    };
    if args.max_iterations == Some(0) {
        return Err(usage("--max-iterations must be at least 1"));
    }
    config.max_iterations = args.max_iterations;
    config.seed = common.seed;
    config.record_trace = args.trace_out.is_some();
    config.check_invariants = true;
    Ok(config)
}

pub fn load(args: &SolveArgs) -> anyhow::Result<ProblemInstance> {
    let p = load_problem(&args.problem).with_context(|| format!("loading {}", args.problem.display()))?;
    Ok(match args.oracle {
        Some(o) => p.with_oracle_mode(o.into()),
        None => p,
    })
}

pub fn report(common: &Common, p: &ProblemInstance, config: &SolverConfig, run: &RunResult) -> anyhow::Result<SolveReport> {
    Ok(SolveReport::new(
        p.name(),
        config.variant,
        p.oracle_mode(),
        config.epsilon,
        config.seed,
        run,
        p.g(&run.x_bar)?,
        p.objective_value(&run.x_bar),
        !common.no_timestamp,
    ))
}

pub fn run(common: &Common, args: &SolveArgs) -> anyhow::Result<i32> {
    let config = config(common, args)?;
    let p = load(args)?;
    let result = solve(&p, &config)?;
    if let Some(path) = &args.trace_out {
        write_atomic(path, &trace_csv(&result.trace)?)?;
    }
    let text = report(common, &p, &config, &result)?.to_json();
    match &args.result_out {
        Some(path) => write_atomic(path, text.as_bytes())?,
        None => print!("{text}"),
    }
    if result.stop_reason == StopReason::CapReached {
        eprintln!("iteration cap reached after {} steps without meeting the stopping rule", result.iterations);
        return Ok(EXIT_CAP_REACHED);
    }
    Ok(EXIT_OK)
}
