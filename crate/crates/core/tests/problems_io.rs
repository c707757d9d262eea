use proptest::prelude::*;

use smd_core::problems::{default_resolution, fixtures, problem_from_json, problem_to_json};
use smd_core::{
    generate_quadratic, load_problem, reference_optimum, save_problem, Error, GeneratorParams, GeometryKind,
    OracleMode,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn generated_instances_round_trip_bit_exactly(
        n in 2usize..30,
        m_count in 1usize..8,
        density in prop_oneof![Just(0.1), Just(0.5), Just(1.0)],
        margin in 1e-3f64..1.0,
        seed in any::<u64>(),
        entropy in any::<bool>(),
    ) {
        let p = generate_quadratic(&GeneratorParams {
            n,
            m_count,
            density,
            margin,
            seed,
            geometry: if entropy { GeometryKind::EntropySimplex } else { GeometryKind::EuclideanSimplex },
            oracle: OracleMode::Column,
        })
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.json");
        save_problem(&p, &path).unwrap();
        let back = load_problem(&path).unwrap();
        prop_assert_eq!(&back, &p);
        prop_assert_eq!(problem_to_json(&back), std::fs::read_to_string(&path).unwrap());
    }
}

#[test]
fn generation_is_deterministic() {
    let params = GeneratorParams { n: 20, seed: 99, ..Default::default() };
    assert_eq!(problem_to_json(&generate_quadratic(&params).unwrap()), problem_to_json(&generate_quadratic(&params).unwrap()));
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_problem(dir.path().join("absent.json")), Err(Error::Io(_))));
}

#[test]
fn malformed_fields_are_named() {
    let text = problem_to_json(&fixtures::swap_quadratic(OracleMode::Column));
    let broken = text.replace("\"margin\": ", "\"margin\": \"wide\", \"unused\": ");
    match problem_from_json(&broken) {
        Err(Error::Parse { field, .. }) => assert_eq!(field, "margin"),
        other => panic!("expected a parse error, got {other:?}"),
    }
    let broken = text.replace("\"oracle\": \"column\"", "\"oracle\": \"psychic\"");
    match problem_from_json(&broken) {
        Err(Error::Parse { field, .. }) => assert_eq!(field, "oracle"),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn inconsistent_dimensions_fail_validation() {
    let text = problem_to_json(&fixtures::linear_slack(GeometryKind::EntropySimplex));
    let broken = text.replace("\"n\": 2", "\"n\": 3");
    assert!(matches!(problem_from_json(&broken), Err(Error::Validation(_) | Error::DimensionMismatch { .. })));
}

#[test]
fn grid_reference_is_monotone_in_resolution() {
    for p in [fixtures::quadratic_n3(), fixtures::swap_quadratic(OracleMode::Exact)] {
        let mut previous = f64::INFINITY;
        // each resolution halves the previous one, so every grid contains the last
        for resolution in [0.1, 0.05, 0.025, 0.0125, 0.00625] {
            let r = reference_optimum(&p, resolution).unwrap();
            assert!(r.f_star <= previous + 1e-12, "{} at {resolution}", r.f_star);
            assert!(p.g(&r.x_star).unwrap() <= 0.0);
            previous = r.f_star;
        }
    }
}

#[test]
fn grid_reference_rejects_large_dimensions() {
    let p = generate_quadratic(&GeneratorParams { n: 5, ..Default::default() }).unwrap();
    assert!(reference_optimum(&p, 0.1).is_err());
    assert_eq!(default_resolution(3), 1e-3);
    assert_eq!(default_resolution(4), 1e-2);
}

#[test]
fn shipped_fixture_matches_the_generator() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/quadratic_n3.json");
    let shipped = load_problem(path).unwrap();
    assert_eq!(shipped, fixtures::quadratic_n3());
}
