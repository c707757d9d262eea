//! Multi-seed comparison of stepsize rules and oracles on one instance.
//!
//! Run `i` of every configuration uses seed `base + i`, so any row can be
//! reproduced with a single `solve`.

use std::fmt::Write as _;

use anyhow::Context;
use rayon::prelude::*;

use smd_core::format::format_real;
use smd_core::problems::default_resolution;
use smd_core::{
    load_problem, reference_optimum, solve, worst_case_iterations, FirstOrderOracle, OracleMode, Problem,
    ProblemInstance, SolverConfig, StopReason, Variant,
};

use crate::output::write_atomic;
use crate::{usage, BenchmarkArgs, Common, EXIT_OK};

#[derive(Clone, Debug)]
pub struct BenchmarkOptions {
    pub epsilon: f64,
    pub base_seed: u64,
    pub seeds: u64,
    pub variants: Vec<Variant>,
    pub oracles: Vec<OracleMode>,
    /// Bound used by the fixed variant.
    pub fixed_m: f64,
    /// Reference optimal value; enables the f-gap columns.
    pub f_star: Option<f64>,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
}

/// One finished solve.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub variant: Variant,
    pub oracle: OracleMode,
    pub seed: u64,
    pub iterations: u64,
    pub productive: u64,
    pub m_bar: f64,
    pub m_max: f64,
    pub stop_reason: StopReason,
    pub g_value: f64,
    pub f_gap: Option<f64>,
}

/// A finished solve, or why it failed.
pub type RunRecord = Result<RunOutcome, String>;

/// Aggregate over the seeds of one (variant, oracle) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub variant: Variant,
    pub oracle: OracleMode,
    pub seeds_run: u64,
    /// Seeds whose solve returned an error.
    pub failed: u64,
    pub mean_n: f64,
    pub mean_n_i: f64,
    pub mean_m_bar: f64,
    /// Largest sample norm over every run of the row.
    pub max_m_hat: f64,
    pub mean_f_gap: Option<f64>,
    pub stderr_f_gap: Option<f64>,
    pub mean_g_value: f64,
    pub max_g_value: f64,
    /// `⌈4M̂²R²/ε²⌉` with `M̂ = max_m_hat`.
    pub worst_case_adaptive: u64,
    /// `⌈2M²R²/ε²⌉` with the fixed variant's bound.
    pub fixed_count: u64,
    /// Adaptive: every run stopped within its own `⌈4M̂²R²/ε²⌉`. Fixed:
    /// every run took exactly `fixed_count` steps.
    pub bound_ok: bool,
    pub cap_reached: u64,
}

pub const SUMMARY_HEADER: [&str; 18] = [
    "variant",
    "oracle",
    "seeds_run",
    "failed",
    "mean_N",
    "mean_N_I",
    "mean_M_bar",
    "max_M_hat",
    "mean_f_gap",
    "stderr_f_gap",
    "mean_g_value",
    "max_g_value",
    "worst_case_adaptive",
    "fixed_count",
    "bound_ok",
    "cap_reached",
    "epsilon",
    "radius_squared",
];

/// Runs every (variant, oracle, seed) combination and aggregates per pair.
pub fn run_benchmark(
    p: &ProblemInstance,
    opts: &BenchmarkOptions,
) -> anyhow::Result<(Vec<SummaryRow>, Vec<RunRecord>)> {
    let mut jobs = Vec::new();
    for &variant in &opts.variants {
        for &oracle in &opts.oracles {
            for i in 0..opts.seeds {
                jobs.push((variant, oracle, opts.base_seed.wrapping_add(i)));
            }
        }
    }
    let instances: Vec<(OracleMode, ProblemInstance)> =
        opts.oracles.iter().map(|&o| (o, p.clone().with_oracle_mode(o))).collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.jobs).build()?;
    let outcomes: Vec<RunRecord> = pool.install(|| {
        jobs.par_iter()
            .map(|&(variant, oracle, seed)| {
                let instance = &instances.iter().find(|(o, _)| *o == oracle).expect("instance per oracle").1;
                one_run(instance, opts, variant, seed).map_err(|e| format!("{variant}/{oracle}/seed {seed}: {e}"))
            })
            .collect()
    });

    let radius = p.geometry().radius();
    let fixed_count = worst_case_iterations(opts.fixed_m, radius, opts.epsilon, Variant::Fixed);
    let mut rows = Vec::new();
    for &variant in &opts.variants {
        for &oracle in &opts.oracles {
            let mine: Vec<&RunRecord> = jobs
                .iter()
                .zip(&outcomes)
                .filter(|((v, o, _), _)| *v == variant && *o == oracle)
                .map(|(_, r)| r)
                .collect();
            let ok: Vec<&RunOutcome> = mine.iter().filter_map(|r| r.as_ref().ok()).collect();
            rows.push(summarize(variant, oracle, &ok, mine.len() as u64, radius, opts.epsilon, fixed_count));
        }
    }
    Ok((rows, outcomes))
}

fn one_run(p: &ProblemInstance, opts: &BenchmarkOptions, variant: Variant, seed: u64) -> smd_core::Result<RunOutcome> {
    let config = match variant {
        Variant::Adaptive => SolverConfig::adaptive(opts.epsilon),
        Variant::Fixed => SolverConfig::fixed(opts.epsilon, opts.fixed_m),
    }
    .with_seed(seed);
    let mut config = config;
    config.record_trace = false;
    let run = solve(p, &config)?;
    let f_gap = match (opts.f_star, p.objective_value(&run.x_bar)) {
        (Some(f_star), Some(f)) => Some(f - f_star),
        _ => None,
    };
    Ok(RunOutcome {
        variant,
        oracle: p.oracle_mode(),
        seed,
        iterations: run.iterations,
        productive: run.productive,
        m_bar: run.m_bar,
        m_max: run.m_max,
        stop_reason: run.stop_reason,
        g_value: p.g(&run.x_bar)?,
        f_gap,
    })
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

/// Sample standard deviation over `√len`; zero for a single value.
pub fn standard_error(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

fn summarize(
    variant: Variant,
    oracle: OracleMode,
    ok: &[&RunOutcome],
    attempted: u64,
    radius: f64,
    epsilon: f64,
    fixed_count: u64,
) -> SummaryRow {
    let max_m_hat = ok.iter().map(|r| r.m_max).fold(0.0, f64::max);
    let gaps: Option<Vec<f64>> = ok.iter().map(|r| r.f_gap).collect();
    let gaps = gaps.filter(|g| !g.is_empty());
    let bound_ok = ok.iter().all(|r| match variant {
        Variant::Adaptive => {
            r.stop_reason != StopReason::CriterionMet
                || r.iterations <= worst_case_iterations(r.m_max, radius, epsilon, Variant::Adaptive).max(1)
        }
        Variant::Fixed => r.iterations == fixed_count,
    });
    SummaryRow {
        variant,
        oracle,
        seeds_run: ok.len() as u64,
        failed: attempted - ok.len() as u64,
        mean_n: mean(ok.iter().map(|r| r.iterations as f64)),
        mean_n_i: mean(ok.iter().map(|r| r.productive as f64)),
        mean_m_bar: mean(ok.iter().map(|r| r.m_bar)),
        max_m_hat,
        mean_f_gap: gaps.as_ref().map(|g| mean(g.iter().copied())),
        stderr_f_gap: gaps.as_ref().map(|g| standard_error(g)),
        mean_g_value: mean(ok.iter().map(|r| r.g_value)),
        max_g_value: ok.iter().map(|r| r.g_value).fold(f64::NEG_INFINITY, f64::max),
        worst_case_adaptive: worst_case_iterations(max_m_hat, radius, epsilon, Variant::Adaptive).max(1),
        fixed_count,
        bound_ok,
        cap_reached: ok.iter().filter(|r| r.stop_reason == StopReason::CapReached).count() as u64,
    }
}

pub fn summary_csv(rows: &[SummaryRow], epsilon: f64, radius_squared: f64) -> anyhow::Result<Vec<u8>> {
    let opt = |v: Option<f64>| v.map(format_real).unwrap_or_default();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.variant.as_str().to_owned(),
            r.oracle.as_str().to_owned(),
            r.seeds_run.to_string(),
            r.failed.to_string(),
            format_real(r.mean_n),
            format_real(r.mean_n_i),
            format_real(r.mean_m_bar),
            format_real(r.max_m_hat),
            opt(r.mean_f_gap),
            opt(r.stderr_f_gap),
            format_real(r.mean_g_value),
            format_real(r.max_g_value),
            r.worst_case_adaptive.to_string(),
            r.fixed_count.to_string(),
            r.bound_ok.to_string(),
            r.cap_reached.to_string(),
            format_real(epsilon),
            format_real(radius_squared),
        ])?;
    }
    Ok(w.into_inner()?)
}

pub fn summary_table(rows: &[SummaryRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<9} {:<7} {:>5} {:>12} {:>12} {:>10} {:>11} {:>10} {:>11} {:>12} {:>11} {:>6}",
        "variant", "oracle", "runs", "mean_N", "mean_N_I", "M_bar", "f_gap", "stderr", "max_g", "4M^2R^2/e^2", "2M^2R^2/e^2", "bound"
    );
    let opt = |v: Option<f64>| v.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "-".into());
    for r in rows {
        let _ = writeln!(
            out,
            "{:<9} {:<7} {:>5} {:>12.1} {:>12.1} {:>10.4} {:>11} {:>10} {:>11.3e} {:>12} {:>11} {:>6}",
            r.variant.as_str(),
            r.oracle.as_str(),
            r.seeds_run,
            r.mean_n,
            r.mean_n_i,
            r.mean_m_bar,
            opt(r.mean_f_gap),
            opt(r.stderr_f_gap),
            r.max_g_value,
            r.worst_case_adaptive,
            r.fixed_count,
            if r.bound_ok { "ok" } else { "FAIL" }
        );
    }
    out
}

pub fn run(common: &Common, args: &BenchmarkArgs) -> anyhow::Result<i32> {
    if args.seeds < 1 {
        return Err(usage("--seeds must be at least 1"));
    }
    if args.variants.is_empty() || args.oracles.is_empty() {
        return Err(usage("need at least one variant and one oracle"));
    }
    if let Some(m) = args.fixed_m {
        if !(m.is_finite() && m > 0.0) {
            return Err(usage(format!("--fixed-M must be positive, got {m}")));
        }
    }
    let p = load_problem(&args.problem).with_context(|| format!("loading {}", args.problem.display()))?;
    let fixed_m = match args.fixed_m {
        Some(m) => m,
        None => p.uniform_subgradient_bound()?,
    };
    let f_star = if p.dimension() <= 4 && p.objective_value(p.witness()).is_some() {
        let resolution = args.resolution.unwrap_or_else(|| default_resolution(p.dimension()));
        Some(reference_optimum(&p, resolution)?.f_star)
    } else {
        None
    };
    let opts = BenchmarkOptions {
        epsilon: common.epsilon,
        base_seed: common.seed,
        seeds: args.seeds,
        variants: args.variants.iter().map(|&v| v.into()).collect(),
        oracles: args.oracles.iter().map(|&o| o.into()).collect(),
        fixed_m,
        f_star,
        jobs: common.jobs,
    };
    let (rows, outcomes) = run_benchmark(&p, &opts)?;
    for e in outcomes.iter().filter_map(|r| r.as_ref().err()) {
        eprintln!("failed run: {e}");
    }
    println!(
        "{} (n = {}), epsilon = {}, fixed M = {:.6}, seeds {}..{}{}",
        p.name(),
        p.dimension(),
        common.epsilon,
        fixed_m,
        common.seed,
        common.seed.wrapping_add(args.seeds - 1),
        f_star.map(|f| format!(", f* = {f:.6}")).unwrap_or_default()
    );
    print!("{}", summary_table(&rows));
    if let Some(path) = &args.out {
        write_atomic(path, &summary_csv(&rows, common.epsilon, p.geometry().radius_squared())?)?;
    }
    Ok(EXIT_OK)
}
