//! Tangential calculus on the sphere S^{d-1} and the periodic orientation grid
//! on S¹ used by the kinetic solver.
//!
//! On S¹ every orientation is parameterised as `ω(θ) = (cos θ, sin θ)` and the
//! tangential operators reduce to periodic derivatives in θ.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VicsekError};
use crate::{Matrix, Vector};

/// Tolerance on `| |ω| - 1 |` accepted by [`UnitVector::new`].
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// A point on the unit sphere S^{D-1} ⊂ ℝᴰ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVector<const D: usize>(Vector<D>);

impl<const D: usize> UnitVector<D> {
    /// Validates that `v` already has unit norm.
    pub fn new(v: Vector<D>) -> Result<Self> {
        let n = v.norm();
        if !n.is_finite() || (n - 1.0).abs() > UNIT_NORM_TOL {
            return Err(VicsekError::InvalidInput(format!(
                "expected a unit vector, got norm {n}"
            )));
        }
        Ok(Self(v))
    }

    /// Renormalises `v` onto the sphere. Fails only for the zero vector.
    pub fn normalize(v: Vector<D>) -> Result<Self> {
        let n = v.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(VicsekError::InvalidInput(
                "cannot normalise a zero or non-finite vector".into(),
            ));
        }
        Ok(Self(v / n))
    }

    /// The i-th canonical basis vector (0-based).
    pub fn axis(i: usize) -> Result<Self> {
        if i >= D {
            return Err(VicsekError::IndexOutOfRange { index: i, dim: D });
        }
        let mut v = Vector::<D>::zeros();
        v[i] = 1.0;
        Ok(Self(v))
    }

    pub fn as_vector(&self) -> &Vector<D> {
        &self.0
    }

    pub fn into_inner(self) -> Vector<D> {
        self.0
    }
}

impl UnitVector<2> {
    pub fn from_angle(theta: f64) -> Self {
        Self(Vector::<2>::new(theta.cos(), theta.sin()))
    }
}

/// `P_{v⊥} = Id - v⊗v/|v|²` for a nonzero vector `v` (any norm).
pub fn projector<const D: usize>(v: &Vector<D>) -> Matrix<D> {
    let n2 = v.norm_squared();
    if n2 == 0.0 {
        return Matrix::<D>::identity();
    }
    Matrix::<D>::identity() - v * v.transpose() / n2
}

/// `P_{v⊥} x` without forming the matrix; `v` need not be unit.
#[inline]
pub fn project_onto_tangent<const D: usize>(v: &Vector<D>, x: &Vector<D>) -> Vector<D> {
    let n2 = v.norm_squared();
    if n2 == 0.0 {
        return *x;
    }
    x - v * (v.dot(x) / n2)
}

/// Orthogonal projection of `x` onto the tangent space at `omega`.
///
/// `omega` is re-checked against [`UNIT_NORM_TOL`] so that a raw vector that
/// drifted off the sphere is reported instead of silently projected.
pub fn project_tangent<const D: usize>(omega: &UnitVector<D>, x: &Vector<D>) -> Result<Vector<D>> {
    let w = omega.as_vector();
    let n = w.norm();
    if (n - 1.0).abs() > UNIT_NORM_TOL {
        return Err(VicsekError::InvalidInput(format!(
            "projection axis is not unit (norm {n})"
        )));
    }
    Ok(x - w * w.dot(x))
}

/// Tangential gradient of the coordinate function `ω ↦ ω_i` (0-based `i`):
/// the vector `(δ_ij - ω_i ω_j)_j`.
pub fn tangential_gradient_coordinate<const D: usize>(
    omega: &UnitVector<D>,
    i: usize,
) -> Result<Vector<D>> {
    if i >= D {
        return Err(VicsekError::IndexOutOfRange { index: i, dim: D });
    }
    let w = omega.as_vector();
    let mut g = -w * w[i];
    g[i] += 1.0;
    Ok(g)
}

/// Uniform periodic grid on S¹ with nodes `θ_k = 2πk/n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereGridS1 {
    n_theta: usize,
}

impl SphereGridS1 {
    pub fn new(n_theta: usize) -> Result<Self> {
        if n_theta < 3 {
            return Err(VicsekError::InvalidInput(format!(
                "orientation grid needs at least 3 nodes, got {n_theta}"
            )));
        }
        Ok(Self { n_theta })
    }

    pub fn len(&self) -> usize {
        self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        self.n_theta == 0
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }

    pub fn theta(&self, k: usize) -> f64 {
        self.spacing() * k as f64
    }

    pub fn thetas(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_theta).map(move |k| self.theta(k))
    }

    /// Quadrature weight of each node (all equal to the spacing).
    pub fn weight(&self) -> f64 {
        self.spacing()
    }

    pub fn weights(&self) -> Vec<f64> {
        vec![self.spacing(); self.n_theta]
    }

    /// Orientation `ω(θ_k)`.
    pub fn omega(&self, k: usize) -> Vector<2> {
        let t = self.theta(k);
        Vector::<2>::new(t.cos(), t.sin())
    }

    /// Unit tangent `e_θ = (-sin θ_k, cos θ_k)`.
    pub fn tangent(&self, k: usize) -> Vector<2> {
        let t = self.theta(k);
        Vector::<2>::new(-t.sin(), t.cos())
    }

    /// Samples a function of θ on the grid.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.thetas().map(f).collect()
    }

    fn check_len(&self, field: &[f64]) -> Result<()> {
        if field.len() != self.n_theta {
            return Err(VicsekError::LengthMismatch {
                expected: self.n_theta,
                got: field.len(),
            });
        }
        Ok(())
    }
}

/// Second-order central second derivative in θ with periodic wrap.
pub fn discrete_laplacian_s1(grid: &SphereGridS1, field: &[f64]) -> Result<Vec<f64>> {
    grid.check_len(field)?;
    let n = field.len();
    let h2 = grid.spacing().powi(2);
    Ok((0..n)
        .map(|k| {
            let prev = field[(k + n - 1) % n];
            let next = field[(k + 1) % n];
            (next - 2.0 * field[k] + prev) / h2
        })
        .collect())
}

/// Second-order central first derivative in θ with periodic wrap.
pub fn discrete_derivative_s1(grid: &SphereGridS1, field: &[f64]) -> Result<Vec<f64>> {
    grid.check_len(field)?;
    let n = field.len();
    let h = grid.spacing();
    Ok((0..n)
        .map(|k| (field[(k + 1) % n] - field[(k + n - 1) % n]) / (2.0 * h))
        .collect())
}

/// Periodic trapezoidal rule for `∫_{S¹} field dθ`.
pub fn quadrature_s1(grid: &SphereGridS1, field: &[f64]) -> Result<f64> {
    grid.check_len(field)?;
    Ok(field.iter().sum::<f64>() * grid.weight())
}
