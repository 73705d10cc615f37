use std::f64::consts::PI;

use crate::error::{Result, VicsekError};
use crate::geometry::{quadrature_s1, SphereGridS1, UnitVector};
use crate::Vector;

/// Von Mises density `exp(κ ω·v)/Z` on S¹.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VonMisesParams {
    pub kappa: f64,
    pub mean_direction: UnitVector<2>,
    pub z: f64,
}

impl VonMisesParams {
    /// Normaliser computed by quadrature on `grid`.
    pub fn new(kappa: f64, mean_direction: UnitVector<2>, grid: &SphereGridS1) -> Result<Self> {
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(VicsekError::InvalidInput(format!(
                "concentration must be finite and nonnegative, got {kappa}"
            )));
        }
        let m = mean_direction.into_inner();
        let vals: Vec<f64> = (0..grid.len())
            .map(|k| (kappa * grid.omega(k).dot(&m)).exp())
            .collect();
        let z = quadrature_s1(grid, &vals)?;
        Ok(Self {
            kappa,
            mean_direction,
            z,
        })
    }

    pub fn density(&self, omega: &Vector<2>) -> f64 {
        (self.kappa * omega.dot(self.mean_direction.as_vector())).exp() / self.z
    }

    pub fn density_at_angle(&self, theta: f64) -> f64 {
        self.density(&Vector::<2>::new(theta.cos(), theta.sin()))
    }

    /// Density sampled on the grid.
    pub fn sample(&self, grid: &SphereGridS1) -> Vec<f64> {
        (0..grid.len()).map(|k| self.density(&grid.omega(k))).collect()
    }
}

/// Mean resultant length `I₁(κ)/I₀(κ)` of the von Mises law on S¹ by
/// quadrature on a fine grid.
pub fn mean_resultant_length(kappa: f64) -> f64 {
    let n = 4096;
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..n {
        let c = (2.0 * PI * k as f64 / n as f64).cos();
        // shift by κ to avoid overflow at large concentration
        let w = (kappa * (c - 1.0)).exp();
        num += c * w;
        den += w;
    }
    num / den
}
