use serde::{Deserialize, Serialize};

use crate::error::{Result, VicsekError};
use crate::geometry::SphereGridS1;

/// Spatial part of the kinetic grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpatialGrid {
    /// Spatially homogeneous density `f(t, θ)`.
    Homogeneous,
    /// Uniform periodic grid on `[0, length)` with cell centres `(i + ½)Δx`.
    Torus1D { n_x: usize, length: f64 },
}

impl SpatialGrid {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Homogeneous => Ok(()),
            Self::Torus1D { n_x, length } => {
                if n_x == 0 || !(length.is_finite() && length > 0.0) {
                    Err(VicsekError::InvalidInput(format!(
                        "invalid 1D torus grid: n_x = {n_x}, length = {length}"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn n_x(&self) -> usize {
        match *self {
            Self::Homogeneous => 1,
            Self::Torus1D { n_x, .. } => n_x,
        }
    }

    /// Cell width; 1 for homogeneous grids so that masses are plain θ-integrals.
    pub fn dx(&self) -> f64 {
        match *self {
            Self::Homogeneous => 1.0,
            Self::Torus1D { n_x, length } => length / n_x as f64,
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        match *self {
            Self::Homogeneous => 0.0,
            Self::Torus1D { .. } => (i as f64 + 0.5) * self.dx(),
        }
    }

    pub fn length(&self) -> Option<f64> {
        match *self {
            Self::Homogeneous => None,
            Self::Torus1D { length, .. } => Some(length),
        }
    }

    pub fn is_homogeneous(&self) -> bool {
        matches!(self, Self::Homogeneous)
    }
}

/// Discrete density `f(t, x_i, θ_k)`, stored row-major with θ fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticState {
    pub spatial: SpatialGrid,
    pub grid: SphereGridS1,
    pub f: Vec<f64>,
    pub t: f64,
}

impl KineticState {
    pub fn new(spatial: SpatialGrid, grid: SphereGridS1, f: Vec<f64>) -> Result<Self> {
        spatial.validate()?;
        let expected = spatial.n_x() * grid.len();
        if f.len() != expected {
            return Err(VicsekError::LengthMismatch {
                expected,
                got: f.len(),
            });
        }
        if let Some(v) = f.iter().find(|v| !v.is_finite() || **v < -1e-14) {
            return Err(VicsekError::InvalidInput(format!(
                "density must be finite and nonnegative, found {v}"
            )));
        }
        Ok(Self {
            spatial,
            grid,
            f,
            t: 0.0,
        })
    }

    /// Samples `f(x, θ)` at the nodes.
    pub fn from_fn(
        spatial: SpatialGrid,
        grid: SphereGridS1,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(spatial.n_x() * grid.len());
        for i in 0..spatial.n_x() {
            let x = spatial.x(i);
            values.extend(grid.thetas().map(|t| f(x, t)));
        }
        Self::new(spatial, grid, values)
    }

    /// Uniform density of total mass `mass`.
    pub fn uniform(spatial: SpatialGrid, grid: SphereGridS1, mass: f64) -> Result<Self> {
        let volume = spatial.length().unwrap_or(1.0) * 2.0 * std::f64::consts::PI;
        Self::from_fn(spatial, grid, |_, _| mass / volume)
    }

    pub fn n_x(&self) -> usize {
        self.spatial.n_x()
    }

    pub fn n_theta(&self) -> usize {
        self.grid.len()
    }

    /// `Δx Δθ`.
    pub fn cell_volume(&self) -> f64 {
        self.spatial.dx() * self.grid.spacing()
    }

    pub fn slice(&self, i: usize) -> &[f64] {
        let n = self.n_theta();
        &self.f[i * n..(i + 1) * n]
    }

    pub fn slice_mut(&mut self, i: usize) -> &mut [f64] {
        let n = self.n_theta();
        &mut self.f[i * n..(i + 1) * n]
    }

    pub fn mass(&self) -> f64 {
        self.f.iter().sum::<f64>() * self.cell_volume()
    }

    pub fn min(&self) -> f64 {
        self.f.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Discrete Lᵖ norm over `x` and `θ`; `p = ∞` gives the max norm.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.f.iter().map(|v| v.abs()).fold(0.0, f64::max);
        }
        (self.f.iter().map(|v| v.abs().powf(p)).sum::<f64>() * self.cell_volume()).powf(1.0 / p)
    }

    pub fn same_grid(&self, other: &Self) -> Result<()> {
        if self.spatial != other.spatial || self.grid != other.grid {
            return Err(VicsekError::GridMismatch(
                "kinetic states live on different grids".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn uniform_mass() {
        let g = SphereGridS1::new(32).unwrap();
        let s = KineticState::uniform(SpatialGrid::Homogeneous, g.clone(), 1.0).unwrap();
        assert_relative_eq!(s.mass(), 1.0, epsilon = 1e-14);
        let t = KineticState::uniform(SpatialGrid::Torus1D { n_x: 8, length: 2.0 }, g, 3.0).unwrap();
        assert_relative_eq!(t.mass(), 3.0, epsilon = 1e-13);
        assert_eq!(t.slice(3).len(), 32);
    }

    #[test]
    fn rejects_bad_input() {
        let g = SphereGridS1::new(8).unwrap();
        assert!(KineticState::new(SpatialGrid::Homogeneous, g.clone(), vec![1.0; 7]).is_err());
        assert!(KineticState::new(SpatialGrid::Homogeneous, g, vec![-1.0; 8]).is_err());
    }
}
