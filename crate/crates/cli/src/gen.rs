use anyhow::Context;

use smd_core::problems::problem_to_json;
use smd_core::{generate_quadratic, FirstOrderOracle, GeneratorParams, Problem};

use crate::output::write_atomic;
use crate::{usage, Common, GenArgs, EXIT_OK};

pub fn params(common: &Common, args: &GenArgs) -> anyhow::Result<GeneratorParams> {
    if args.n < 2 {
        return Err(usage(format!("--n must be at least 2, got {}", args.n)));
    }
    if args.m < 1 {
        return Err(usage("--m must be at least 1"));
    }
    if !(args.density > 0.0 && args.density <= 1.0) {
        return Err(usage(format!("--density must lie in (0, 1], got {}", args.density)));
    }
    if !(args.margin.is_finite() && args.margin > 0.0) {
        return Err(usage(format!("--margin must be positive, got {}", args.margin)));
    }
    Ok(GeneratorParams {
        n: args.n,
        m_count: args.m,
        density: args.density,
        margin: args.margin,
        seed: common.seed,
        geometry: args.geometry.into(),
        oracle: args.oracle.into(),
    })
}

pub fn run(common: &Common, args: &GenArgs) -> anyhow::Result<i32> {
    let p = generate_quadratic(&params(common, args)?)?;
    write_atomic(&args.out, problem_to_json(&p).as_bytes())
        .with_context(|| format!("writing instance to {}", args.out.display()))?;
    println!(
        "{}: n = {}, {} constraint pieces, geometry {} (R^2 = {:.6}), oracle {}, g(witness) = {:.3e} -> {}",
        p.name(),
        p.dimension(),
        p.constraint().count(),
        p.geometry().kind(),
        p.geometry().radius_squared(),
        p.oracle_mode(),
        p.g(p.witness())?,
        args.out.display()
    );
    Ok(EXIT_OK)
}
