//! Named model presets and catalogued initial densities.

use serde::{Deserialize, Serialize};

use crate::coefficients::{
    CoefficientSet, Friction, Kernel, OrientationProfile, SpatialProfile, VonMisesParams, Viscosity,
};
use crate::error::Result;
use crate::geometry::{SphereGridS1, UnitVector};
use crate::kinetic::{KineticState, SpatialGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    ClassicVicsek,
    NonNormalized,
    FluxDependent,
    SignedKernel,
}

impl Preset {
    /// Coefficients with alignment strength `|ν|` (or slope) and base viscosity `σ`.
    pub fn coefficients(self, nu_abs: f64, sigma: f64) -> CoefficientSet {
        match self {
            Self::ClassicVicsek => classic_vicsek(nu_abs, sigma),
            Self::NonNormalized => non_normalized(nu_abs, sigma),
            Self::FluxDependent => flux_dependent(nu_abs, sigma, sigma),
            Self::SignedKernel => signed_kernel(nu_abs, sigma, 1.5),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::ClassicVicsek => "classic-vicsek",
            Self::NonNormalized => "non-normalized",
            Self::FluxDependent => "flux-dependent",
            Self::SignedKernel => "signed-kernel",
        }
    }
}

/// `K = ω*`, `α = 0`, `ν = −|ν|`, constant `σ`.
pub fn classic_vicsek(nu_abs: f64, sigma: f64) -> CoefficientSet {
    CoefficientSet {
        speed: 1.0,
        alpha: 0.0,
        kernel: Kernel::alignment(),
        friction: Friction::Constant { value: -nu_abs.abs() },
        viscosity: Viscosity::Constant { value: sigma },
    }
}

/// As [`classic_vicsek`] with `α = 1`: the alignment target is the raw flux.
pub fn non_normalized(nu_abs: f64, sigma: f64) -> CoefficientSet {
    CoefficientSet {
        alpha: 1.0,
        ..classic_vicsek(nu_abs, sigma)
    }
}

/// `ν = −slope·|J|` and `σ = base + gain·|J|²/(1 + |J|²)`.
pub fn flux_dependent(slope: f64, base: f64, gain: f64) -> CoefficientSet {
    CoefficientSet {
        friction: Friction::FluxLinear { slope: -slope.abs() },
        viscosity: Viscosity::FluxSaturating { base, gain },
        ..classic_vicsek(0.0, base)
    }
}

/// `K = ω* + bias·e₁`: the first flux coordinate stays positive when `bias > 1`.
pub fn signed_kernel(nu_abs: f64, sigma: f64, bias: f64) -> CoefficientSet {
    CoefficientSet {
        kernel: Kernel::new(SpatialProfile::Uniform, OrientationProfile::Biased { bias }),
        ..classic_vicsek(nu_abs, sigma)
    }
}

/// Unit-mass density `ρ(x) M_{e₁,κ}(θ)` with uniform `ρ` on the spatial grid.
pub fn vonmises_state(spatial: SpatialGrid, grid: SphereGridS1, kappa: f64) -> Result<KineticState> {
    perturbed_vonmises_state(spatial, grid, kappa, 0.0)
}

/// Unit-mass density proportional to `exp(κ cos θ)(1 + ε sin 2θ)` in θ,
/// uniform in `x`. Requires `|ε| < 1` for positivity.
pub fn perturbed_vonmises_state(
    spatial: SpatialGrid,
    grid: SphereGridS1,
    kappa: f64,
    epsilon: f64,
) -> Result<KineticState> {
    let vm = VonMisesParams::new(kappa, UnitVector::axis(0)?, &grid)?;
    let rho = 1.0 / spatial.length().unwrap_or(1.0);
    // sin 2θ integrates to zero against exp(κ cos θ), so the mass is unchanged
    KineticState::from_fn(spatial, grid, |_, t| {
        rho * vm.density_at_angle(t) * (1.0 + epsilon * (2.0 * t).sin())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for p in [
            Preset::ClassicVicsek,
            Preset::NonNormalized,
            Preset::FluxDependent,
            Preset::SignedKernel,
        ] {
            p.coefficients(1.0, 0.5).validate(2).unwrap();
            p.coefficients(1.0, 0.5).validate(3).unwrap();
        }
        assert!(matches!(
            classic_vicsek(2.0, 1.0).friction,
            Friction::Constant { value } if value == -2.0
        ));
    }

    #[test]
    fn vonmises_states_have_unit_mass() {
        let g = SphereGridS1::new(64).unwrap();
        let s = vonmises_state(SpatialGrid::Torus1D { n_x: 16, length: 3.0 }, g.clone(), 2.0).unwrap();
        assert!((s.mass() - 1.0).abs() < 1e-12);
        let s = perturbed_vonmises_state(SpatialGrid::Homogeneous, g, 2.0, 0.3).unwrap();
        assert!((s.mass() - 1.0).abs() < 1e-12);
    }
}
