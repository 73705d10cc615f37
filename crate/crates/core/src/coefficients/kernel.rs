//! Catalogued interaction kernels.
//!
//! Every kernel factorises as `K(x, x*, ω, ω*) = b(x − x*) · (a(ω*) + B(ω*) ω)`
//! with a scalar spatial profile `b` and an orientation part that is affine in
//! the query orientation `ω`. Fluxes can therefore be accumulated as moments
//! `(Σ a, Σ B)` and evaluated at any query orientation in O(1).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VicsekError};
use crate::{Matrix, Vector};

/// Radial profile `b` of the kernel in the displacement `x − x*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpatialProfile {
    /// `b ≡ 1`: every particle interacts with every other one.
    Uniform,
    /// `b(r) = (1 − r²/R²)²` for `r < R`, zero outside, with `r = |x − x*|`.
    Bump { radius: f64 },
    /// Same profile applied to the first coordinate of the displacement only.
    Slab { radius: f64 },
}

/// Orientation part `o(ω, ω*) = a(ω*) + B(ω*) ω` of the kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OrientationProfile {
    /// `o = ω*`.
    Alignment,
    /// `o = ω* + bias·e₁`; for `bias > 1` the first coordinate never vanishes.
    Biased { bias: f64 },
    /// `o ≡ value`, independent of both orientations.
    Constant { value: Vec<f64> },
    /// `o = ω* (1 + strength·ω·ω*)`, depends on the query orientation.
    Anisotropic { strength: f64 },
}

/// Geometry over which `x*` is integrated when computing L² norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpatialMeasure {
    /// Spatially homogeneous densities: the spatial profile is not used.
    Homogeneous,
    /// Periodic interval of the given length (1D kinetic grids).
    Torus1D { length: f64 },
    /// Periodic box with the given total volume, `dim` spatial dimensions.
    Torus { volume: f64, dim: usize },
    /// Whole space ℝ^dim.
    Free { dim: usize },
}

/// Orientation moments `(a, B)` summed over a weighted set of `ω*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments<const D: usize> {
    pub a: Vector<D>,
    pub b: Matrix<D>,
}

impl<const D: usize> Moments<D> {
    pub fn zero() -> Self {
        Self {
            a: Vector::zeros(),
            b: Matrix::zeros(),
        }
    }

    /// Adds `w · (a(ω*), B(ω*))`.
    #[inline]
    pub fn add_scaled(&mut self, other: &Self, w: f64) {
        self.a += other.a * w;
        self.b += other.b * w;
    }

    pub fn scaled(&self, w: f64) -> Self {
        Self {
            a: self.a * w,
            b: self.b * w,
        }
    }

    /// Flux `a + B ω` at the query orientation.
    #[inline]
    pub fn flux(&self, omega: &Vector<D>) -> Vector<D> {
        self.a + self.b * omega
    }
}

/// Interaction kernel with analytically declared norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Kernel {
    pub spatial: SpatialProfile,
    pub orientation: OrientationProfile,
}

/// `∫₀¹ (1 − s²)⁴ s^{k−1} ds = ½ B(k/2, 5)`.
fn bump_radial_moment(k: usize) -> f64 {
    let a = k as f64 / 2.0;
    0.5 * 24.0 / (a * (a + 1.0) * (a + 2.0) * (a + 3.0) * (a + 4.0))
}

/// Surface area of S^{k−1}.
pub fn sphere_area(k: usize) -> f64 {
    // |S^{k-1}| = 2π^{k/2}/Γ(k/2), via the recursion |S^{k+1}| = 2π/k |S^{k-1}|
    match k {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (k as f64 - 2.0) * sphere_area(k - 2),
    }
}

fn bump(r: f64, radius: f64) -> f64 {
    if r >= radius {
        0.0
    } else {
        let s = 1.0 - (r / radius).powi(2);
        s * s
    }
}

impl SpatialProfile {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Uniform => Ok(()),
            Self::Bump { radius } | Self::Slab { radius } => {
                if radius.is_finite() && *radius > 0.0 {
                    Ok(())
                } else {
                    Err(VicsekError::InvalidInput(format!(
                        "kernel radius must be positive, got {radius}"
                    )))
                }
            }
        }
    }

    /// `b(dx)` for a displacement already reduced to the minimal image.
    #[inline]
    pub fn eval<const D: usize>(&self, dx: &Vector<D>) -> f64 {
        match self {
            Self::Uniform => 1.0,
            Self::Bump { radius } => bump(dx.norm(), *radius),
            Self::Slab { radius } => bump(dx[0].abs(), *radius),
        }
    }

    /// Profile as a function of a scalar displacement (1D kinetic grids).
    #[inline]
    pub fn eval_1d(&self, dx: f64) -> f64 {
        match self {
            Self::Uniform => 1.0,
            Self::Bump { radius } | Self::Slab { radius } => bump(dx.abs(), *radius),
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self, Self::Uniform)
    }

    /// `sup |∇b|`.
    pub fn gradient_sup(&self) -> f64 {
        match self {
            Self::Uniform => 0.0,
            // max of 4 s (1 − s²)/R at s = 1/√3
            Self::Bump { radius } | Self::Slab { radius } => 8.0 / (3.0 * 3f64.sqrt() * radius),
        }
    }

    /// `∫ b(y)² dy` over the given geometry (1 for homogeneous densities).
    pub fn l2_squared(&self, measure: SpatialMeasure) -> f64 {
        match (self, measure) {
            (_, SpatialMeasure::Homogeneous) => 1.0,
            (Self::Uniform, SpatialMeasure::Torus1D { length }) => length,
            (Self::Uniform, SpatialMeasure::Torus { volume, .. }) => volume,
            (Self::Uniform, SpatialMeasure::Free { .. }) => f64::INFINITY,
            (Self::Bump { radius } | Self::Slab { radius }, SpatialMeasure::Torus1D { .. }) => {
                2.0 * radius * bump_radial_moment(1)
            }
            (Self::Bump { radius }, SpatialMeasure::Torus { dim, .. } | SpatialMeasure::Free { dim }) => {
                sphere_area(dim) * radius.powi(dim as i32) * bump_radial_moment(dim)
            }
            (Self::Slab { radius }, SpatialMeasure::Torus { volume, .. }) => {
                // slab along x₁ times the transverse extent; bounded by the volume
                (2.0 * radius * bump_radial_moment(1)).min(1.0) * volume
            }
            (Self::Slab { .. }, SpatialMeasure::Free { .. }) => f64::INFINITY,
        }
    }
}

impl OrientationProfile {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Self::Constant { value } if value.len() != dim => Err(VicsekError::LengthMismatch {
                expected: dim,
                got: value.len(),
            }),
            Self::Biased { bias } | Self::Anisotropic { strength: bias } if !bias.is_finite() => {
                Err(VicsekError::InvalidInput("non-finite kernel parameter".into()))
            }
            _ => Ok(()),
        }
    }

    /// Moments `(a(ω*), B(ω*))` of a single orientation `ω*`.
    #[inline]
    pub fn moments<const D: usize>(&self, omega_star: &Vector<D>) -> Moments<D> {
        match self {
            Self::Alignment => Moments {
                a: *omega_star,
                b: Matrix::zeros(),
            },
            Self::Biased { bias } => {
                let mut a = *omega_star;
                a[0] += bias;
                Moments { a, b: Matrix::zeros() }
            }
            Self::Constant { value } => Moments {
                a: Vector::from_fn(|i, _| value.get(i).copied().unwrap_or(0.0)),
                b: Matrix::zeros(),
            },
            Self::Anisotropic { strength } => Moments {
                a: *omega_star,
                b: omega_star * omega_star.transpose() * *strength,
            },
        }
    }

    /// Whether the orientation part depends on the query orientation `ω`.
    pub fn depends_on_query(&self) -> bool {
        matches!(self, Self::Anisotropic { strength } if *strength != 0.0)
    }

    fn constant_norm(&self) -> f64 {
        match self {
            Self::Constant { value } => value.iter().map(|v| v * v).sum::<f64>().sqrt(),
            _ => 0.0,
        }
    }

    /// `sup |o|`.
    pub fn sup(&self) -> f64 {
        match self {
            Self::Alignment => 1.0,
            Self::Biased { bias } => 1.0 + bias.abs(),
            Self::Constant { .. } => self.constant_norm(),
            Self::Anisotropic { strength } => 1.0 + strength.abs(),
        }
    }

    /// `(sup|o_i|, sup|∇_{ω*} o_i|, sup|Δ_{ω*} o_i|)` for coordinate `i` in dimension `dim`.
    fn coordinate_bounds(&self, i: usize, dim: usize) -> (f64, f64, f64) {
        let lap = dim as f64 - 1.0;
        match self {
            Self::Alignment => (1.0, 1.0, lap),
            Self::Biased { bias } => (1.0 + if i == 0 { bias.abs() } else { 0.0 }, 1.0, lap),
            Self::Constant { value } => (value.get(i).map_or(0.0, |v| v.abs()), 0.0, 0.0),
            Self::Anisotropic { strength } => {
                let a = strength.abs();
                (1.0 + a, 1.0 + 2.0 * a, lap * (1.0 + a) + 2.0 * a + lap * a)
            }
        }
    }

    /// `sup |∇_ω o|` in the query orientation.
    pub fn query_gradient_sup(&self) -> f64 {
        match self {
            Self::Anisotropic { strength } => strength.abs(),
            _ => 0.0,
        }
    }

    /// `∫_{S^{dim−1}} |o(ω, ω*)|² dω*`, maximised over `ω`.
    pub fn l2_squared(&self, dim: usize) -> f64 {
        let area = sphere_area(dim);
        match self {
            Self::Alignment => area,
            Self::Biased { bias } => area * (1.0 + bias * bias),
            Self::Constant { .. } => area * self.constant_norm().powi(2),
            Self::Anisotropic { strength } => area * (1.0 + strength * strength / dim as f64),
        }
    }
}

impl Kernel {
    pub fn new(spatial: SpatialProfile, orientation: OrientationProfile) -> Self {
        Self {
            spatial,
            orientation,
        }
    }

    /// `K = ω*`, spatially uniform.
    pub fn alignment() -> Self {
        Self::new(SpatialProfile::Uniform, OrientationProfile::Alignment)
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        self.spatial.validate()?;
        self.orientation.validate(dim)
    }

    /// `K(x, x*, ω, ω*)` with `dx = x − x*` already reduced to the minimal image.
    #[inline]
    pub fn eval<const D: usize>(
        &self,
        dx: &Vector<D>,
        omega: &Vector<D>,
        omega_star: &Vector<D>,
    ) -> Vector<D> {
        let b = self.spatial.eval(dx);
        if b == 0.0 {
            return Vector::zeros();
        }
        self.orientation.moments(omega_star).flux(omega) * b
    }

    pub fn depends_on_query(&self) -> bool {
        self.orientation.depends_on_query()
    }

    /// `‖K‖_{L^∞}`.
    pub fn sup_norm(&self) -> f64 {
        self.orientation.sup()
    }

    /// `‖K‖_{L^∞ W^{1,∞}_ω}`: the sup norm plus the sup of the query gradient.
    pub fn w1_omega_norm(&self) -> f64 {
        self.orientation.sup() + self.orientation.query_gradient_sup()
    }

    /// Per-coordinate `‖K_i‖_{W^{1,∞}_{t,x*} W^{2,∞}_{ω*} L^∞_{x,ω}}`, taken as
    /// `sup|K_i| + sup|∂ₜK_i| + sup|∇_{x*}K_i| + sup|∇_{ω*}K_i| + sup|Δ_{ω*}K_i|`.
    /// Catalogued kernels are time independent.
    pub fn coordinate_norms(&self, dim: usize, homogeneous: bool) -> Vec<f64> {
        let grad_b = if homogeneous {
            0.0
        } else {
            self.spatial.gradient_sup()
        };
        (0..dim)
            .map(|i| {
                let (s, g, l) = self.orientation.coordinate_bounds(i, dim);
                s * (1.0 + grad_b) + g + l
            })
            .collect()
    }

    /// `sup_{x,ω} (∫ |K|² dx* dω*)^{1/2}`.
    pub fn l2_norm(&self, dim: usize, measure: SpatialMeasure) -> f64 {
        (self.spatial.l2_squared(measure) * self.orientation.l2_squared(dim)).sqrt()
    }
}
