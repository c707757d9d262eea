use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Gamma};

use smd_core::geometry::INTERIOR_SHIFT;
use smd_core::oracle::RngStream;
use smd_core::validate::random_simplex_point;
use smd_core::{Geometry, GeometryKind};

fn geometries(n: usize) -> [Geometry; 2] {
    [Geometry::entropy(n).unwrap(), Geometry::euclidean(n).unwrap()]
}

fn simplex_point() -> impl Strategy<Value = Vec<f64>> {
    (2usize..8).prop_flat_map(|n| proptest::collection::vec(0.0f64..1.0, n)).prop_map(normalize)
}

fn normalize(v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    if total == 0.0 {
        vec![1.0 / v.len() as f64; v.len()]
    } else {
        v.into_iter().map(|a| a / total).collect()
    }
}

fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..8).prop_flat_map(|n| {
        (
            proptest::collection::vec(0.0f64..1.0, n).prop_map(normalize),
            proptest::collection::vec(0.0f64..1.0, n).prop_map(normalize),
        )
    })
}

proptest! {
    #[test]
    fn bregman_is_non_negative((x, y) in pair()) {
        for g in geometries(x.len()) {
            prop_assert!(g.bregman(&x, &y).unwrap() >= 0.0);
        }
    }

    #[test]
    fn bregman_vanishes_on_the_diagonal(x in simplex_point()) {
        for g in geometries(x.len()) {
            prop_assert!(g.bregman(&x, &x).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn prox_output_is_on_the_simplex(
        x in simplex_point(),
        scale in prop_oneof![Just(1e-3), Just(1.0), Just(50.0), Just(1e4)],
        seed in any::<u64>(),
    ) {
        let mut rng = RngStream::new(seed);
        let y: Vec<f64> = (0..x.len()).map(|_| scale * (2.0 * rng.uniform() - 1.0)).collect();
        for g in geometries(x.len()) {
            let u = g.prox_map(&x, &y).unwrap();
            let total: f64 = u.iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-10, "sum {}", total);
            prop_assert!(u.iter().all(|&v| v >= -1e-12));
        }
    }
}

#[test]
fn bregman_is_zero_only_on_the_diagonal() {
    let mut rng = RngStream::new(17);
    for n in [2, 3, 6] {
        for g in geometries(n) {
            for _ in 0..200 {
                let x = random_simplex_point(n, &mut rng);
                let y = random_simplex_point(n, &mut rng);
                let dist: f64 = x.iter().zip(y.iter()).map(|(a, b)| (a - b).abs()).sum();
                if dist > 1e-3 {
                    assert!(g.bregman(&x, &y).unwrap() > 1e-12);
                }
            }
        }
    }
}

#[test]
fn strong_convexity_modulus_one() {
    let mut rng = RngStream::new(1);
    for n in [2, 3, 10] {
        for g in geometries(n) {
            for t in 0..1000 {
                let x = random_simplex_point(n, &mut rng);
                // every tenth pair uses a vertex in the second slot
                let y = if t % 10 == 0 {
                    let mut e = vec![0.0; n];
                    e[t % n] = 1.0;
                    e.into()
                } else {
                    random_simplex_point(n, &mut rng)
                };
                let diff: Vec<f64> = x.iter().zip(y.iter()).map(|(a, b)| b - a).collect();
                let norm = g.primal_norm(&diff).unwrap();
                let v = g.bregman(&x, &y).unwrap();
                assert!(v >= 0.5 * norm * norm - 1e-12, "{:?}: V = {v}, ½‖·‖² = {}", g.kind(), 0.5 * norm * norm);
            }
        }
    }
}

#[test]
fn prox_satisfies_the_variational_inequality() {
    let mut rng = RngStream::new(2);
    for n in [2, 4, 9] {
        for g in geometries(n) {
            for _ in 0..50 {
                let x = random_simplex_point(n, &mut rng);
                let scale = [0.01, 1.0, 5.0][rng.random_range(0..3)];
                let y: Vec<f64> = (0..n).map(|_| scale * (2.0 * rng.uniform() - 1.0)).collect();
                let u = g.prox_map(&x, &y).unwrap();
                let du = g.dgf_gradient(&u).unwrap();
                let dx = g.dgf_gradient(&x).unwrap();
                for _ in 0..100 {
                    let v = random_simplex_point(n, &mut rng);
                    let ip: f64 = (0..n).map(|i| (y[i] + du[i] - dx[i]) * (v[i] - u[i])).sum();
                    assert!(ip >= -1e-8, "{:?} n={n}: {ip}", g.kind());
                }
            }
        }
    }
}

#[test]
fn radius_bounds_divergence_from_the_start_point() {
    let mut rng = RngStream::new(3);
    for n in [2, 3, 5, 50] {
        for g in geometries(n) {
            let start = g.dgf_minimizer();
            for t in 0..1000 {
                let y = if t < n {
                    let mut e = vec![0.0; n];
                    e[t] = 1.0;
                    e.into()
                } else {
                    random_simplex_point(n, &mut rng)
                };
                assert!(g.bregman(&start, &y).unwrap() <= g.radius_squared() + 1e-9);
            }
        }
    }
}

/// A random point on the unit sphere of the primal norm: random signs times a
/// sparse Dirichlet draw for ℓ₁, a normalized Gaussian for ℓ₂.
fn unit_direction(g: &Geometry, rng: &mut RngStream) -> Vec<f64> {
    let n = g.dimension();
    let raw: Vec<f64> = match g.kind() {
        GeometryKind::EntropySimplex => {
            let gamma = Gamma::new(0.2, 1.0).unwrap();
            (0..n)
                .map(|_| {
                    let s = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
                    s * gamma.sample(rng)
                })
                .collect()
        }
        GeometryKind::EuclideanSimplex => (0..n).map(|_| rng.sample(rand_distr::StandardNormal)).collect(),
    };
    let norm = g.primal_norm(&raw).unwrap();
    raw.into_iter().map(|v| v / norm).collect()
}

#[test]
fn dual_norm_is_the_support_function_of_the_unit_ball() {
    let mut rng = RngStream::new(4);
    for n in [2, 3, 4] {
        for g in geometries(n) {
            for _ in 0..5 {
                let grad: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
                let dual = g.dual_norm(&grad).unwrap();
                let mut best = f64::NEG_INFINITY;
                for _ in 0..10_000 {
                    let u = unit_direction(&g, &mut rng);
                    let ip: f64 = grad.iter().zip(&u).map(|(a, b)| a * b).sum();
                    assert!(ip <= dual * (1.0 + 1e-12), "Hölder violated");
                    best = best.max(ip);
                }
                assert!(best >= 0.98 * dual, "{:?} n={n}: sampled {best} vs {dual}", g.kind());
            }
        }
    }
}

#[test]
fn interior_shift_keeps_the_point_on_the_simplex() {
    let g = Geometry::entropy(3).unwrap();
    let shifted = smd_core::geometry::interior_shift(&[1.0, 0.0, 0.0]);
    assert!((shifted.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    assert_eq!(shifted[1], INTERIOR_SHIFT);
    assert!(g.dgf_gradient(&[1.0, 0.0, 0.0]).unwrap().iter().all(|v| v.is_finite()));
}
