//! Model coefficients: kernel, friction, viscosity, the normalised alignment
//! field and its regularisations.

mod constants;
mod flux;
mod kernel;
mod lipschitz;
mod regularization;
mod vonmises;

pub use constants::{constants_report, ConstantsReport};
pub use flux::{flux_empirical, flux_kinetic, FluxField, FluxSource, KineticMoments};
pub use kernel::{sphere_area, Kernel, Moments, OrientationProfile, SpatialMeasure, SpatialProfile};
pub use lipschitz::lipschitz_probe;
pub use regularization::{gamma, tau0, tau1, tau2, tau_eps0, RegularizationSpec};
pub use vonmises::{mean_resultant_length, VonMisesParams};

use serde::{Deserialize, Serialize};

use crate::error::{Result, VicsekError};
use crate::Vector;

/// `|J|` below which the normalised field `J/|J|` is reported as singular (α = 0).
pub const SINGULAR_FLUX_TOL: f64 = 1e-10;

/// Friction `ν` as a function of the local flux norm `|J|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Friction {
    /// `ν ≡ value`. Alignment corresponds to `value < 0`.
    Constant { value: f64 },
    /// `ν = slope · |J|`.
    FluxLinear { slope: f64 },
}

/// Viscosity `σ` as a function of the local flux norm `s = |J|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Viscosity {
    /// `σ ≡ value`.
    Constant { value: f64 },
    /// `σ = base + gain · s² / (1 + s²)`.
    FluxSaturating { base: f64, gain: f64 },
}

impl Friction {
    #[inline]
    pub fn eval(&self, flux_norm: f64) -> f64 {
        match *self {
            Self::Constant { value } => value,
            Self::FluxLinear { slope } => slope * flux_norm,
        }
    }

    pub fn depends_on_flux(&self) -> bool {
        matches!(self, Self::FluxLinear { slope } if *slope != 0.0)
    }
}

impl Viscosity {
    #[inline]
    pub fn eval(&self, flux_norm: f64) -> f64 {
        match *self {
            Self::Constant { value } => value,
            Self::FluxSaturating { base, gain } => {
                let s2 = flux_norm * flux_norm;
                base + gain * s2 / (1.0 + s2)
            }
        }
    }

    /// `dσ/ds` at `s = |J|`.
    #[inline]
    pub fn derivative(&self, flux_norm: f64) -> f64 {
        match *self {
            Self::Constant { .. } => 0.0,
            Self::FluxSaturating { gain, .. } => {
                let d = 1.0 + flux_norm * flux_norm;
                gain * 2.0 * flux_norm / (d * d)
            }
        }
    }

    pub fn depends_on_flux(&self) -> bool {
        matches!(self, Self::FluxSaturating { gain, .. } if *gain != 0.0)
    }

    pub fn lower_bound(&self) -> f64 {
        match *self {
            Self::Constant { value } => value,
            Self::FluxSaturating { base, gain } => base + gain.min(0.0),
        }
    }

    pub fn upper_bound(&self) -> f64 {
        match *self {
            Self::Constant { value } => value,
            Self::FluxSaturating { base, gain } => base + gain.max(0.0),
        }
    }
}

/// Bounds and Lipschitz metadata of a [`CoefficientSet`] for a given mass and geometry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientBounds {
    pub sigma0: f64,
    pub sigma_inf: f64,
    pub nu_inf: f64,
    pub nu_lip: f64,
    pub sigma_lip: f64,
    pub kernel_sup: f64,
    pub kernel_w1_omega: f64,
    pub kernel_l2: f64,
    pub kernel_coordinate_norms: Vec<f64>,
}

/// The model `(c, α, K, ν, σ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSet {
    pub speed: f64,
    pub alpha: f64,
    pub kernel: Kernel,
    pub friction: Friction,
    pub viscosity: Viscosity,
}

/// Local coefficient values at one query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalCoefficients {
    pub nu: f64,
    pub sigma: f64,
}

impl CoefficientSet {
    /// Full hypotheses check: `α ∈ [0, 1]`, finite speed, valid kernel and a
    /// viscosity bounded below by a positive constant.
    pub fn validate(&self, dim: usize) -> Result<()> {
        self.validate_basic(dim)?;
        if !(self.viscosity.lower_bound() > 0.0) {
            return Err(VicsekError::InvalidInput(format!(
                "viscosity must be bounded below by a positive constant, got sigma0 = {}",
                self.viscosity.lower_bound()
            )));
        }
        Ok(())
    }

    /// As [`validate`](Self::validate) but admits `σ ≡ 0` (deterministic particle runs).
    pub fn validate_basic(&self, dim: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(VicsekError::InvalidInput(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        if !self.speed.is_finite() {
            return Err(VicsekError::InvalidInput("speed must be finite".into()));
        }
        if !(self.viscosity.lower_bound() >= 0.0) {
            return Err(VicsekError::InvalidInput(format!(
                "viscosity must be nonnegative, got {}",
                self.viscosity.lower_bound()
            )));
        }
        self.kernel.validate(dim)
    }

    #[inline]
    pub fn local(&self, flux_norm: f64) -> LocalCoefficients {
        LocalCoefficients {
            nu: self.friction.eval(flux_norm),
            sigma: self.viscosity.eval(flux_norm),
        }
    }

    /// True when neither ν, σ nor the kernel depend on the density.
    pub fn is_measure_independent(&self) -> bool {
        let kernel_off = matches!(
            &self.kernel.orientation,
            OrientationProfile::Constant { value } if value.iter().all(|v| *v == 0.0)
        );
        !self.friction.depends_on_flux()
            && !self.viscosity.depends_on_flux()
            && (kernel_off || matches!(self.friction, Friction::Constant { value } if value == 0.0))
    }

    /// Declared bounds for densities of mass `mass` over `measure`.
    pub fn bounds(&self, dim: usize, mass: f64, measure: SpatialMeasure) -> CoefficientBounds {
        let kernel_sup = self.kernel.sup_norm();
        let kernel_l2 = self.kernel.l2_norm(dim, measure);
        let flux_sup = kernel_sup * mass;
        let (nu_inf, nu_lip) = match self.friction {
            Friction::Constant { value } => (value.abs(), 0.0),
            Friction::FluxLinear { slope } => (slope.abs() * flux_sup, slope.abs() * kernel_l2),
        };
        let sigma_lip = match self.viscosity {
            Viscosity::Constant { .. } => 0.0,
            // sup of d/ds s²/(1+s²) is 3√3/8
            Viscosity::FluxSaturating { gain, .. } => {
                gain.abs() * 3.0 * 3f64.sqrt() / 8.0 * kernel_l2
            }
        };
        CoefficientBounds {
            sigma0: self.viscosity.lower_bound(),
            sigma_inf: self.viscosity.upper_bound(),
            nu_inf,
            nu_lip,
            sigma_lip,
            kernel_sup,
            kernel_w1_omega: self.kernel.w1_omega_norm(),
            kernel_l2,
            kernel_coordinate_norms: self
                .kernel
                .coordinate_norms(dim, matches!(measure, SpatialMeasure::Homogeneous)),
        }
    }
}

/// `|J|_α = α + (1 − α)|J|`.
#[inline]
pub fn alpha_norm<const D: usize>(j: &Vector<D>, alpha: f64) -> f64 {
    alpha + (1.0 - alpha) * j.norm()
}

/// `Ψ = J / |J|_α`. Singular for α = 0 and `|J| < SINGULAR_FLUX_TOL`.
pub fn psi<const D: usize>(j: &Vector<D>, alpha: f64) -> Result<Vector<D>> {
    let n = j.norm();
    if alpha == 0.0 && n < SINGULAR_FLUX_TOL {
        return Err(VicsekError::SingularFlux {
            time: f64::NAN,
            particle: None,
            flux_norm: n,
            blowup: f64::INFINITY,
        });
    }
    Ok(j / (alpha + (1.0 - alpha) * n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn alpha_norm_examples() {
        let j = Vector::<2>::new(0.3, 0.4);
        assert_eq!(alpha_norm(&j, 1.0), 1.0);
        assert_relative_eq!(alpha_norm(&j, 0.0), 0.5);
        assert_relative_eq!(alpha_norm(&Vector::<2>::new(2.0, 0.0), 0.25), 1.75);
    }

    #[test]
    fn psi_examples() {
        let j = Vector::<3>::new(3.0, 0.0, 0.0);
        assert_eq!(psi(&j, 0.0).unwrap(), Vector::<3>::x());
        assert_eq!(psi(&j, 1.0).unwrap(), j);
        assert!(matches!(
            psi(&Vector::<3>::zeros(), 0.0),
            Err(VicsekError::SingularFlux { .. })
        ));
        assert_eq!(psi(&Vector::<3>::zeros(), 0.5).unwrap(), Vector::<3>::zeros());
    }

    #[test]
    fn saturating_viscosity_lipschitz_constant() {
        let v = Viscosity::FluxSaturating { base: 0.5, gain: 1.0 };
        let sup = (0..100_000)
            .map(|k| v.derivative(k as f64 * 1e-4).abs())
            .fold(0.0, f64::max);
        assert_relative_eq!(sup, 3.0 * 3f64.sqrt() / 8.0, max_relative = 1e-6);
        let h = 1e-6;
        assert_relative_eq!(
            v.derivative(0.7),
            (v.eval(0.7 + h) - v.eval(0.7 - h)) / (2.0 * h),
            max_relative = 1e-7
        );
    }

    #[test]
    fn alpha_out_of_range_is_rejected() {
        let mut c = crate::presets::classic_vicsek(1.0, 1.0);
        c.alpha = 1.5;
        let e = c.validate(2).unwrap_err();
        assert!(e.to_string().contains("alpha"));
    }

    proptest! {
        #[test]
        fn psi_alpha_zero_is_unit(x in -5.0f64..5.0, y in -5.0f64..5.0, z in -5.0f64..5.0) {
            let j = Vector::<3>::new(x, y, z);
            prop_assume!(j.norm() >= SINGULAR_FLUX_TOL);
            prop_assert!((psi(&j, 0.0).unwrap().norm() - 1.0).abs() < 1e-14);
        }

        #[test]
        fn alpha_norm_at_least_alpha(a in 0.0f64..=1.0, x in -5.0f64..5.0, y in -5.0f64..5.0) {
            prop_assert!(alpha_norm(&Vector::<2>::new(x, y), a) >= a);
        }
    }
}
