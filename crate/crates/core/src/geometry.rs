//! Proximal setups on the probability simplex.
//!
//! A [`Geometry`] bundles a norm on the primal space, its dual norm, a
//! distance generating function `d` that is 1-strongly convex with respect to
//! the primal norm, the induced Bregman divergence
//! `V(x, y) = d(y) - d(x) - <d'(x), y - x>` and the proximal mapping
//! `Mirr_x(y) = argmin_u { <y, u> + V(x, u) }` over the simplex.
//!
//! Two setups are provided:
//!
//! * [`GeometryKind::EuclideanSimplex`]: `d(x) = ½‖x‖₂²`, primal norm ℓ₂, the
//!   prox step is a Euclidean projection onto the simplex.
//! * [`GeometryKind::EntropySimplex`]: `d(x) = Σ xᵢ ln xᵢ`, primal norm ℓ₁,
//!   dual norm ℓ∞, the prox step is a multiplicative-weights update.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for simplex membership checks (`Σx = 1`, `x ≥ 0`).
pub const FEASIBILITY_TOLERANCE: f64 = 1e-8;

/// Weight `δ` of the uniform point mixed into entropy arguments before taking
/// logarithms: `x ← (1 - nδ)x + δ𝟙`.
pub const INTERIOR_SHIFT: f64 = 1e-15;

/// A point of the primal space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

/// An element of the dual space, e.g. a (stochastic) subgradient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DualVector(Vec<f64>);

macro_rules! impl_vector_newtype {
    ($name:ident) => {
        impl $name {
            pub fn zeros(n: usize) -> Self {
                Self(vec![0.0; n])
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.0
            }

            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }

            pub fn dim(&self) -> usize {
                self.0.len()
            }

            pub fn dot(&self, other: &[f64]) -> f64 {
                dot(&self.0, other)
            }
        }

        impl Deref for $name {
            type Target = [f64];

            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(v: Vec<f64>) -> Self {
                Self(v)
            }
        }

        impl From<&[f64]> for $name {
            fn from(v: &[f64]) -> Self {
                Self(v.to_vec())
            }
        }
    };
}

impl_vector_newtype!(Point);
impl_vector_newtype!(DualVector);

impl DualVector {
    /// Returns `factor * self`.
    pub fn scaled(&self, factor: f64) -> DualVector {
        DualVector(self.0.iter().map(|v| factor * v).collect())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Which proximal setup a [`Geometry`] uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GeometryKind {
    #[serde(rename = "euclidean")]
    EuclideanSimplex,
    #[serde(rename = "entropy")]
    EntropySimplex,
}

impl GeometryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GeometryKind::EuclideanSimplex => "euclidean",
            GeometryKind::EntropySimplex => "entropy",
        }
    }
}

impl fmt::Display for GeometryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for GeometryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(GeometryKind::EuclideanSimplex),
            "entropy" => Ok(GeometryKind::EntropySimplex),
            other => Err(Error::InvalidArgument(format!("unknown geometry `{other}`"))),
        }
    }
}

/// A proximal setup on the `n`-dimensional simplex together with the radius
/// constant `R²` bounding the Bregman divergence from the start point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Geometry {
    dimension: usize,
    kind: GeometryKind,
    radius_squared: f64,
}

impl Geometry {
    /// Creates a geometry with the default radius: `R² = ln n` for the entropy
    /// setup (`1` when `n = 1`, where every divergence vanishes) and `R² = 1`
    /// for the Euclidean one.
    pub fn new(kind: GeometryKind, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let radius_squared = match kind {
            GeometryKind::EuclideanSimplex => 1.0,
            GeometryKind::EntropySimplex if dimension == 1 => 1.0,
            GeometryKind::EntropySimplex => (dimension as f64).ln(),
        };
        Ok(Self { dimension, kind, radius_squared })
    }

    pub fn euclidean(dimension: usize) -> Result<Self> {
        Self::new(GeometryKind::EuclideanSimplex, dimension)
    }

    pub fn entropy(dimension: usize) -> Result<Self> {
        Self::new(GeometryKind::EntropySimplex, dimension)
    }

    /// Overrides `R²`.
    pub fn with_radius_squared(mut self, radius_squared: f64) -> Result<Self> {
        if !(radius_squared.is_finite() && radius_squared > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "radius_squared must be positive and finite, got {radius_squared}"
            )));
        }
        self.radius_squared = radius_squared;
        Ok(self)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn kind(&self) -> GeometryKind {
        self.kind
    }

    pub fn radius_squared(&self) -> f64 {
        self.radius_squared
    }

    pub fn radius(&self) -> f64 {
        self.radius_squared.sqrt()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, found: len });
        }
        Ok(())
    }

    /// Checks length and finiteness of a dual vector.
    pub fn check_dual(&self, g: &[f64]) -> Result<()> {
        self.check_len(g.len())?;
        check_finite(g)
    }

    /// Checks that `x` lies on the simplex within [`FEASIBILITY_TOLERANCE`].
    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        self.check_len(x.len())?;
        check_finite(x)?;
        check_simplex(x, FEASIBILITY_TOLERANCE)
    }

    /// `d(x)`.
    pub fn dgf_value(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(match self.kind {
            GeometryKind::EuclideanSimplex => 0.5 * dot(x, x),
            GeometryKind::EntropySimplex => {
                x.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum()
            }
        })
    }

    /// `d'(x)`; for the entropy setup evaluated at the interior-shifted point.
    pub fn dgf_gradient(&self, x: &[f64]) -> Result<DualVector> {
        self.check_point(x)?;
        Ok(match self.kind {
            GeometryKind::EuclideanSimplex => DualVector::from(x),
            GeometryKind::EntropySimplex => {
                DualVector(interior_shift(x).into_iter().map(|v| v.ln() + 1.0).collect())
            }
        })
    }

    /// Bregman divergence `V(x, y)`.
    ///
    /// For the entropy setup this is the generalized Kullback-Leibler
    /// divergence `Σ yᵢ ln(yᵢ/xᵢ) - yᵢ + xᵢ` with `x` interior-shifted, which
    /// equals `KL(y‖x)` on the simplex.
    pub fn bregman(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(match self.kind {
            GeometryKind::EuclideanSimplex => {
                0.5 * x.iter().zip(y).map(|(a, b)| (b - a) * (b - a)).sum::<f64>()
            }
            GeometryKind::EntropySimplex => interior_shift(x)
                .into_iter()
                .zip(y)
                .map(|(xi, &yi)| {
                    let ylny = if yi > 0.0 { yi * (yi / xi).ln() } else { 0.0 };
                    (ylny - yi + xi).max(0.0)
                })
                .sum(),
        })
    }

    /// Conjugate norm `‖g‖_*`: ℓ₂ for the Euclidean setup, ℓ∞ for entropy.
    pub fn dual_norm(&self, g: &[f64]) -> Result<f64> {
        self.check_dual(g)?;
        Ok(match self.kind {
            GeometryKind::EuclideanSimplex => dot(g, g).sqrt(),
            GeometryKind::EntropySimplex => g.iter().fold(0.0_f64, |m, v| m.max(v.abs())),
        })
    }

    /// Primal norm `‖v‖`: ℓ₂ for the Euclidean setup, ℓ₁ for entropy.
    pub fn primal_norm(&self, v: &[f64]) -> Result<f64> {
        self.check_len(v.len())?;
        Ok(match self.kind {
            GeometryKind::EuclideanSimplex => dot(v, v).sqrt(),
            GeometryKind::EntropySimplex => v.iter().map(|a| a.abs()).sum(),
        })
    }

    /// The proximal mapping `Mirr_x(y)`.
    pub fn prox_map(&self, x: &[f64], y: &[f64]) -> Result<Point> {
        self.check_point(x)?;
        self.check_dual(y)?;
        Ok(Point(match self.kind {
            GeometryKind::EuclideanSimplex => {
                let shifted: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
                project_onto_simplex(&shifted)
            }
            GeometryKind::EntropySimplex => {
                // uᵢ ∝ exp(ln xᵢ - yᵢ - max_j(ln x_j - y_j))
                let logits: Vec<f64> =
                    interior_shift(x).iter().zip(y).map(|(a, b)| a.ln() - b).collect();
                let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut u: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
                let total: f64 = u.iter().sum();
                u.iter_mut().for_each(|v| *v /= total);
                u
            }
        }))
    }

    /// `argmin_x d(x)` over the simplex: the uniform point for both setups.
    pub fn dgf_minimizer(&self) -> Point {
        Point(vec![1.0 / self.dimension as f64; self.dimension])
    }
}

fn check_finite(v: &[f64]) -> Result<()> {
    match v.iter().position(|a| !a.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

fn check_simplex(x: &[f64], tol: f64) -> Result<()> {
    if let Some((i, v)) = x.iter().enumerate().find(|(_, &v)| v < -tol) {
        return Err(Error::Infeasible(format!("coordinate {i} is {v}")));
    }
    let total: f64 = x.iter().sum();
    if (total - 1.0).abs() > tol {
        return Err(Error::Infeasible(format!("coordinates sum to {total}")));
    }
    Ok(())
}

/// `(1 - nδ)x + δ𝟙` with negative round-off clipped to zero first.
pub fn interior_shift(x: &[f64]) -> Vec<f64> {
    let scale = 1.0 - x.len() as f64 * INTERIOR_SHIFT;
    x.iter().map(|&v| scale * v.max(0.0) + INTERIOR_SHIFT).collect()
}

/// Euclidean projection onto the probability simplex by sorting and
/// thresholding.
pub fn project_onto_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut threshold = 0.0;
    for (j, &s) in sorted.iter().enumerate() {
        cumulative += s;
        let candidate = (cumulative - 1.0) / (j + 1) as f64;
        if s - candidate > 0.0 {
            threshold = candidate;
        }
    }
    v.iter().map(|&a| (a - threshold).max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn entropy(n: usize) -> Geometry {
        Geometry::entropy(n).unwrap()
    }

    fn euclid(n: usize) -> Geometry {
        Geometry::euclidean(n).unwrap()
    }

    #[test]
    fn dgf_values() {
        assert_eq!(entropy(2).dgf_value(&[1.0, 0.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(entropy(2).dgf_value(&[0.5, 0.5]).unwrap(), -(2.0_f64.ln()), epsilon = 1e-15);
        assert_abs_diff_eq!(euclid(2).dgf_value(&[0.5, 0.5]).unwrap(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn dgf_rejects_bad_input() {
        assert!(matches!(
            entropy(3).dgf_value(&[0.5, 0.5]),
            Err(Error::DimensionMismatch { expected: 3, found: 2 })
        ));
        assert!(matches!(euclid(2).dgf_value(&[0.7, 0.7]), Err(Error::Infeasible(_))));
        assert!(matches!(euclid(2).dgf_value(&[1.5, -0.5]), Err(Error::Infeasible(_))));
        assert!(matches!(euclid(2).dgf_value(&[f64::NAN, 1.0]), Err(Error::NonFinite { index: 0 })));
        // within tolerance
        assert!(euclid(2).dgf_value(&[1.0 + 1e-9, -1e-9]).is_ok());
    }

    #[test]
    fn bregman_examples() {
        for g in [entropy(2), euclid(2)] {
            assert_abs_diff_eq!(g.bregman(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(
            entropy(2).bregman(&[0.5, 0.5], &[1.0, 0.0]).unwrap(),
            2.0_f64.ln(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(euclid(2).bregman(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn bregman_at_vertex_first_slot_is_finite() {
        let v = entropy(2).bregman(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn dual_norms() {
        assert_eq!(euclid(2).dual_norm(&[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(entropy(2).dual_norm(&[3.0, -4.0]).unwrap(), 4.0);
        assert_eq!(entropy(3).dual_norm(&[0.0; 3]).unwrap(), 0.0);
        assert_eq!(euclid(3).dual_norm(&[0.0; 3]).unwrap(), 0.0);
        assert!(euclid(3).dual_norm(&[0.0; 2]).is_err());
    }

    #[test]
    fn prox_examples() {
        let u = entropy(2).prox_map(&[0.5, 0.5], &[2.0_f64.ln(), 0.0]).unwrap();
        assert_abs_diff_eq!(u[0], 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(u[1], 2.0 / 3.0, epsilon = 1e-12);

        let u = euclid(2).prox_map(&[0.5, 0.5], &[-0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(u[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(u[1], 0.0, epsilon = 1e-15);

        let x = [0.2, 0.3, 0.5];
        for g in [entropy(3), euclid(3)] {
            let u = g.prox_map(&x, &[0.0; 3]).unwrap();
            for (a, b) in u.iter().zip(&x) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn entropy_prox_survives_huge_steps() {
        let u = entropy(3).prox_map(&[0.2, 0.3, 0.5], &[1e6, -1e6, 3e5]).unwrap();
        assert!(u.iter().all(|v| v.is_finite()));
        assert_abs_diff_eq!(u[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn minimizers() {
        assert_eq!(entropy(2).dgf_minimizer().as_slice(), &[0.5, 0.5]);
        assert_eq!(euclid(4).dgf_minimizer().as_slice(), &[0.25; 4]);
        assert_eq!(entropy(1).dgf_minimizer().as_slice(), &[1.0]);
    }

    #[test]
    fn default_radius() {
        assert_abs_diff_eq!(entropy(5).radius_squared(), 5.0_f64.ln());
        assert_eq!(euclid(5).radius_squared(), 1.0);
        assert!(entropy(1).radius_squared() > 0.0);
        assert!(euclid(3).with_radius_squared(0.0).is_err());
        assert!(Geometry::euclidean(0).is_err());
    }

    #[test]
    fn projection_of_interior_point_is_identity() {
        let v = [0.1, 0.6, 0.3];
        let p = project_onto_simplex(&v);
        for (a, b) in p.iter().zip(&v) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn projection_matches_brute_force_in_2d() {
        // on the segment {(t, 1 - t)} the closest point to (a, b) is t = clip((1 + a - b)/2)
        for &(a, b) in &[(3.0_f64, -1.0_f64), (0.2, 0.9), (-4.0, -4.5), (0.5, 0.5)] {
            let t: f64 = ((1.0 + a - b) / 2.0).clamp(0.0, 1.0);
            let p = project_onto_simplex(&[a, b]);
            assert_abs_diff_eq!(p[0], t, epsilon = 1e-14);
            assert_abs_diff_eq!(p[1], 1.0 - t, epsilon = 1e-14);
        }
    }
}
