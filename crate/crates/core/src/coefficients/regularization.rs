//! Lipschitz surrogates for the normalised field and the sphere projections.

use serde::{Deserialize, Serialize};

use super::{CoefficientSet, FluxSource};
use crate::error::{Result, VicsekError};
use crate::{Matrix, Vector};

/// Parameters of the flux floor regularisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizationSpec {
    pub eps0: f64,
    #[serde(default = "default_gamma_radius")]
    pub gamma_radius: f64,
    #[serde(default = "default_tau12_threshold")]
    pub tau12_threshold: f64,
}

fn default_gamma_radius() -> f64 {
    2.0
}

fn default_tau12_threshold() -> f64 {
    0.5
}

impl RegularizationSpec {
    pub fn new(eps0: f64) -> Result<Self> {
        let spec = Self {
            eps0,
            gamma_radius: default_gamma_radius(),
            tau12_threshold: default_tau12_threshold(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps0.is_finite() && self.eps0 > 0.0) {
            return Err(VicsekError::InvalidInput(format!(
                "eps0 must be positive, got {}",
                self.eps0
            )));
        }
        if !(self.gamma_radius > 0.0 && self.tau12_threshold > 0.0) {
            return Err(VicsekError::InvalidInput(
                "gamma_radius and tau12_threshold must be positive".into(),
            ));
        }
        Ok(())
    }

    /// `J / (α + (1 − α) max(|J|, ε₀))`, identical in formula to `Ψ` once `|J| ≥ ε₀`.
    #[inline]
    pub fn tau_of_flux<const D: usize>(&self, j: &Vector<D>, alpha: f64) -> Vector<D> {
        j / (alpha + (1.0 - alpha) * j.norm().max(self.eps0))
    }
}

/// `τ_{ε₀}(x, v, m)` with the flux of `m` evaluated at `(x, v)`.
pub fn tau_eps0<const D: usize, S: FluxSource<D> + ?Sized>(
    x: &Vector<D>,
    v: &Vector<D>,
    m: &S,
    coeffs: &CoefficientSet,
    reg: &RegularizationSpec,
) -> Vector<D> {
    reg.tau_of_flux(&m.flux_at(&coeffs.kernel, x, v), coeffs.alpha)
}

/// Radial clamp `γ(v) = v · min(1, R/|v|)` with `R = reg.gamma_radius`.
#[inline]
pub fn gamma<const D: usize>(v: &Vector<D>, radius: f64) -> Vector<D> {
    let n = v.norm();
    if n > radius {
        v * (radius / n)
    } else {
        *v
    }
}

/// `τ₀(x, v, m) = τ_{ε₀}(x, γ(v), m)`.
pub fn tau0<const D: usize, S: FluxSource<D> + ?Sized>(
    x: &Vector<D>,
    v: &Vector<D>,
    m: &S,
    coeffs: &CoefficientSet,
    reg: &RegularizationSpec,
) -> Vector<D> {
    tau_eps0(x, &gamma(v, reg.gamma_radius), m, coeffs, reg)
}

/// Ramp `s(r) = clamp((r − t/2)/(t/2), 0, 1)` for threshold `t`; with `t = 1/2`
/// this is `clamp(4r − 1, 0, 1)`.
#[inline]
fn ramp(r: f64, threshold: f64) -> f64 {
    let h = 0.5 * threshold;
    ((r - h) / h).clamp(0.0, 1.0)
}

/// `τ₁(v)`: equals `P_{v⊥}` for `|v| ≥ 1/2`, ramped to zero inside.
pub fn tau1<const D: usize>(v: &Vector<D>, reg: &RegularizationSpec) -> Matrix<D> {
    let n = v.norm();
    let s = ramp(n, reg.tau12_threshold);
    if s == 0.0 {
        return Matrix::zeros();
    }
    (Matrix::identity() - v * v.transpose() / (n * n)) * s
}

/// `τ₂(v)`: equals `v/|v|²` for `|v| ≥ 1/2`, ramped to zero inside.
pub fn tau2<const D: usize>(v: &Vector<D>, reg: &RegularizationSpec) -> Vector<D> {
    let n = v.norm();
    let s = ramp(n, reg.tau12_threshold);
    let floor = 0.5 * reg.tau12_threshold;
    v * (s / n.max(floor).powi(2))
}
