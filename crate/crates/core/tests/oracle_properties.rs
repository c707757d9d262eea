use rand::Rng;
use rand_distr::StandardNormal;

use smd_core::oracle::{unbiasedness_report, RngStream};
use smd_core::problems::fixtures;
use smd_core::validate::random_simplex_point;
use smd_core::{
    generate_quadratic, FirstOrderOracle, GeneratorParams, MaxLinearConstraint, Objective, OracleMode,
    QuadraticObjective,
};

fn random_symmetric(n: usize, rng: &mut RngStream) -> QuadraticObjective {
    let b: Vec<f64> = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
    let a: Vec<f64> = (0..n * n).map(|p| 0.5 * (b[p] + b[(p % n) * n + p / n])).collect();
    QuadraticObjective::dense(n, a).unwrap()
}

#[test]
fn column_estimator_is_unbiased() {
    let mut rng = RngStream::new(10);
    for n in [2, 5, 8] {
        let q = random_symmetric(n, &mut rng);
        for _ in 0..3 {
            let x = random_simplex_point(n, &mut rng);
            let r = unbiasedness_report(&q, &x, 100_000, &mut rng).unwrap();
            assert!(r.within(4.0), "n={n}: z = {}", r.max_z_score());
        }
    }
}

#[test]
fn swap_matrix_monte_carlo_mean() {
    let q = QuadraticObjective::from_rows(&[vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
    let mut rng = RngStream::new(77);
    let draws = 100_000;
    let mut sum = [0.0; 2];
    for _ in 0..draws {
        let s = q.column_sample_gradient(&[0.5, 0.5], &mut rng).unwrap();
        sum[0] += s[0];
        sum[1] += s[1];
    }
    // standard error 1/√(10⁵) per component
    let se = 1.0 / (draws as f64).sqrt();
    for s in sum {
        assert!((s / draws as f64 - 1.0).abs() <= 4.0 * se);
    }
}

#[test]
fn identical_seeds_give_identical_samples() {
    let p = generate_quadratic(&GeneratorParams { n: 30, seed: 4, ..Default::default() }).unwrap();
    let x = random_simplex_point(30, &mut RngStream::new(0));
    let draw = |seed| {
        let mut rng = RngStream::new(seed);
        (0..200).map(|_| p.objective_sample(&x, &mut rng).unwrap()).collect::<Vec<_>>()
    };
    assert_eq!(draw(5), draw(5));
    assert_ne!(draw(5), draw(6));
}

#[test]
fn constraint_subgradient_inequality() {
    let mut rng = RngStream::new(11);
    let p = generate_quadratic(&GeneratorParams { n: 6, m_count: 5, density: 0.5, seed: 3, ..Default::default() })
        .unwrap();
    let c = p.constraint();
    for _ in 0..1000 {
        let x = random_simplex_point(6, &mut rng);
        let y = random_simplex_point(6, &mut rng);
        let s = c.subgradient(&x).unwrap();
        let lin: f64 = c.value(&x).unwrap() + s.iter().zip(y.iter().zip(x.iter())).map(|(a, (b, c))| a * (b - c)).sum::<f64>();
        assert!(c.value(&y).unwrap() >= lin - 1e-10);
    }

    let dense = MaxLinearConstraint::from_dense(&[vec![1.0, -2.0, 0.5], vec![0.0, 3.0, -1.0]]).unwrap();
    for _ in 0..1000 {
        let x = random_simplex_point(3, &mut rng);
        let y = random_simplex_point(3, &mut rng);
        let s = dense.subgradient(&x).unwrap();
        let lin = dense.value(&x).unwrap() + (0..3).map(|i| s[i] * (y[i] - x[i])).sum::<f64>();
        assert!(dense.value(&y).unwrap() >= lin - 1e-10);
    }
}

#[test]
fn sparse_and_dense_constraint_forms_agree() {
    let p = generate_quadratic(&GeneratorParams { n: 40, m_count: 10, seed: 21, ..Default::default() }).unwrap();
    let c = p.constraint();
    let mut rng = RngStream::new(12);
    for _ in 0..200 {
        // arbitrary points, not only simplex ones
        let x: Vec<f64> = (0..40).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let total: f64 = x.iter().sum();
        for m in 0..c.count() {
            let sparse = c.rows()[m].dot(&x) - c.offsets()[m] * total;
            let dense = c.dense_row(m).dot(&x);
            assert!((sparse - dense).abs() <= 1e-12 * (1.0 + dense.abs()), "{sparse} vs {dense}");
        }
        let y = random_simplex_point(40, &mut rng);
        let (row, offset) = c.sparse_subgradient(&y).unwrap();
        let dense = c.subgradient(&y).unwrap();
        assert!((row.dot(&y) - offset - dense.dot(&y)).abs() <= 1e-12);
    }
}

#[test]
fn exact_gradient_matches_central_differences() {
    let mut rng = RngStream::new(13);
    for n in [2, 5, 12] {
        let q = random_symmetric(n, &mut rng);
        let f = Objective::Quadratic(q.clone());
        for _ in 0..50 {
            let x = random_simplex_point(n, &mut rng);
            let v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let step = 1e-6;
            let plus: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + step * b).collect();
            let minus: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a - step * b).collect();
            let fd = (f.value(&plus).unwrap() - f.value(&minus).unwrap()) / (2.0 * step);
            let analytic = q.exact_gradient(&x).unwrap().dot(&v);
            assert!((fd - analytic).abs() <= 1e-5 * analytic.abs().max(1.0), "{fd} vs {analytic}");
        }
    }
}

#[test]
fn triplet_instances_sample_like_dense_ones() {
    let p = generate_quadratic(&GeneratorParams { n: 25, density: 0.2, seed: 8, ..Default::default() }).unwrap();
    let Objective::Quadratic(q) = p.objective() else { panic!("quadratic expected") };
    let mut rng = RngStream::new(14);
    let x = random_simplex_point(25, &mut rng);
    let r = unbiasedness_report(q, &x, 100_000, &mut rng).unwrap();
    assert!(r.within(4.0), "z = {}", r.max_z_score());
}

#[test]
fn linear_objectives_are_noise_free() {
    let p = fixtures::linear_slack(smd_core::GeometryKind::EntropySimplex).with_oracle_mode(OracleMode::Column);
    assert!(p.is_deterministic());
    let mut rng = RngStream::new(0);
    assert_eq!(p.objective_sample(&[0.5, 0.5], &mut rng).unwrap().as_slice(), &[0.0, 1.0]);
    assert!(!fixtures::swap_quadratic(OracleMode::Column).is_deterministic());
}
