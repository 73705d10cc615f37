//! Nonlinear kinetic equation: coefficients frozen at `fⁿ` each step, then one
//! linear step.

use serde::{Deserialize, Serialize};

use super::linear::{step_linear, LinearCoefficientField, ThetaMode};
use super::state::KineticState;
use crate::coefficients::{
    constants_report, CoefficientSet, FluxField, RegularizationSpec, SINGULAR_FLUX_TOL,
};
use crate::error::{Result, VicsekError};

/// Which normalised field drives the drift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AlignmentField {
    /// `Ψ = J/|J|_α`.
    Exact,
    /// `τ_{ε₀} = J/(α + (1 − α) max(|J|, ε₀))`.
    Regularized { eps0: f64 },
}

impl AlignmentField {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Exact => Ok(()),
            Self::Regularized { eps0 } => RegularizationSpec::new(eps0).map(|_| ()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KineticConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_mode")]
    pub theta_mode: ThetaMode,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
}

fn default_mode() -> ThetaMode {
    ThetaMode::Implicit
}

fn default_stride() -> usize {
    1
}

impl KineticConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            theta_mode: ThetaMode::Implicit,
            snapshot_stride: 1,
        }
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(VicsekError::InvalidInput(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(VicsekError::InvalidInput(format!(
                "t_end must be nonnegative, got {}",
                self.t_end
            )));
        }
        if self.snapshot_stride == 0 {
            return Err(VicsekError::InvalidInput("snapshot_stride must be at least 1".into()));
        }
        Ok(())
    }
}

/// Flux diagnostics of one assembled field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluxRecord {
    pub t: f64,
    pub min_flux: f64,
    pub min_alpha_norm: f64,
    /// `sup |ν(f)|/|J[f]|_α` over the grid.
    pub blowup: f64,
}

/// `(σ(f), ν(f) P_{ω⊥}Ψ[f])` at every node, plus flux diagnostics.
pub fn assemble_field(
    state: &KineticState,
    coeffs: &CoefficientSet,
    field: &AlignmentField,
) -> Result<(LinearCoefficientField, FluxRecord)> {
    let flux = FluxField::compute(state, coeffs);
    let record = FluxRecord {
        t: state.t,
        min_flux: flux.min_norm(),
        min_alpha_norm: flux.min_alpha_norm(),
        blowup: flux
            .j
            .iter()
            .zip(&flux.alpha_norm)
            .map(|(j, a)| coeffs.friction.eval(j.norm()).abs() / a)
            .fold(0.0, f64::max),
    };
    if matches!(field, AlignmentField::Exact) && coeffs.alpha == 0.0 && record.min_flux < SINGULAR_FLUX_TOL {
        return Err(VicsekError::SingularFlux {
            time: state.t,
            particle: None,
            flux_norm: record.min_flux,
            blowup: f64::INFINITY,
        });
    }
    let nt = state.n_theta();
    let mut sigma = Vec::with_capacity(state.f.len());
    let mut psi = Vec::with_capacity(state.f.len());
    for (idx, (j, a)) in flux.j.iter().zip(&flux.alpha_norm).enumerate() {
        let s = j.norm();
        let local = coeffs.local(s);
        let dir = match field {
            AlignmentField::Exact => j / *a,
            AlignmentField::Regularized { eps0 } => {
                j / (coeffs.alpha + (1.0 - coeffs.alpha) * s.max(*eps0))
            }
        };
        sigma.push(local.sigma);
        psi.push(local.nu * dir.dot(&state.grid.tangent(idx % nt)));
    }
    Ok((LinearCoefficientField { sigma, psi }, record))
}

#[derive(Debug, Clone, PartialEq)]
pub struct KineticTrajectory {
    pub snapshots: Vec<KineticState>,
    /// One record per step, evaluated at the start of the step, plus the final state.
    pub flux_records: Vec<FluxRecord>,
    pub warnings: Vec<String>,
}

/// Solves the nonlinear equation on `[t₀, t₀ + T]` from `state0`.
pub fn solve_nonlinear(
    state0: &KineticState,
    coeffs: &CoefficientSet,
    field: &AlignmentField,
    config: &KineticConfig,
) -> Result<KineticTrajectory> {
    coeffs.validate(2)?;
    field.validate()?;
    config.validate()?;
    let mut warnings = Vec::new();
    if matches!(field, AlignmentField::Exact) && coeffs.alpha == 0.0 {
        match constants_report(state0, coeffs, 2.0) {
            Ok(r) if config.t_end >= r.t1 => warnings.push(format!(
                "t_end = {} is not below the existence horizon T1 = {}",
                config.t_end, r.t1
            )),
            Ok(_) => {}
            Err(e) => warnings.push(format!("constants unavailable: {e}")),
        }
    }
    let mut state = state0.clone();
    let t0 = state.t;
    let n = config.n_steps();
    let mut snapshots = vec![state.clone()];
    let mut flux_records = Vec::with_capacity(n + 1);
    for k in 0..n {
        let (lin, rec) = assemble_field(&state, coeffs, field)?;
        flux_records.push(rec);
        step_linear(&mut state, &lin, coeffs.speed, config.dt, config.theta_mode)?;
        state.t = t0 + (k + 1) as f64 * config.dt;
        if (k + 1) % config.snapshot_stride == 0 || k + 1 == n {
            snapshots.push(state.clone());
        }
    }
    flux_records.push(assemble_field(&state, coeffs, field)?.1);
    Ok(KineticTrajectory {
        snapshots,
        flux_records,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{Friction, Kernel, OrientationProfile, SpatialProfile, Viscosity};
    use crate::geometry::SphereGridS1;
    use crate::kinetic::SpatialGrid;
    use crate::presets;

    #[test]
    fn alpha_one_uniform_is_stationary() {
        let c = CoefficientSet {
            speed: 1.0,
            alpha: 1.0,
            kernel: Kernel::alignment(),
            friction: Friction::Constant { value: -2.0 },
            viscosity: Viscosity::Constant { value: 0.5 },
        };
        let sp = SpatialGrid::Torus1D { n_x: 8, length: 1.0 };
        let s0 = KineticState::uniform(sp, SphereGridS1::new(32).unwrap(), 1.0).unwrap();
        let tr = solve_nonlinear(&s0, &c, &AlignmentField::Exact, &KineticConfig::new(0.01, 0.2)).unwrap();
        let last = tr.snapshots.last().unwrap();
        let err = last.f.iter().zip(&s0.f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-14);
        assert!(tr.flux_records.iter().all(|r| r.min_alpha_norm == 1.0));
    }

    #[test]
    fn exact_and_regularized_coincide_above_floor() {
        let c = presets::classic_vicsek(1.0, 1.0);
        let s0 = presets::vonmises_state(SpatialGrid::Homogeneous, SphereGridS1::new(64).unwrap(), 2.0).unwrap();
        let cfg = KineticConfig::new(0.01, 0.3);
        let a = solve_nonlinear(&s0, &c, &AlignmentField::Exact, &cfg).unwrap();
        let b = solve_nonlinear(&s0, &c, &AlignmentField::Regularized { eps0: 0.05 }, &cfg).unwrap();
        assert!(a.flux_records.iter().all(|r| r.min_flux >= 0.05));
        assert_eq!(a.snapshots, b.snapshots);
    }

    #[test]
    fn exact_uniform_alpha_zero_is_singular() {
        let c = presets::classic_vicsek(1.0, 1.0);
        let s0 = KineticState::uniform(SpatialGrid::Homogeneous, SphereGridS1::new(32).unwrap(), 1.0).unwrap();
        let err = solve_nonlinear(&s0, &c, &AlignmentField::Exact, &KineticConfig::new(0.01, 0.1)).unwrap_err();
        assert!(matches!(err, VicsekError::SingularFlux { blowup, .. } if blowup.is_infinite()));
        // the regularized field is zero on the uniform state
        let ok = solve_nonlinear(&s0, &c, &AlignmentField::Regularized { eps0: 0.1 }, &KineticConfig::new(0.01, 0.1));
        assert!(ok.is_ok());
    }

    #[test]
    fn spatial_kernel_run_conserves_mass() {
        let c = CoefficientSet {
            speed: 1.0,
            alpha: 0.0,
            kernel: Kernel::new(SpatialProfile::Bump { radius: 0.3 }, OrientationProfile::Alignment),
            friction: Friction::Constant { value: -1.0 },
            viscosity: Viscosity::Constant { value: 0.5 },
        };
        let sp = SpatialGrid::Torus1D { n_x: 32, length: 1.0 };
        let s0 = KineticState::from_fn(sp, SphereGridS1::new(32).unwrap(), |x, t| {
            (1.0 + 0.5 * (std::f64::consts::TAU * x).cos()) * (2.0 * t.cos()).exp()
        })
        .unwrap();
        let m0 = s0.mass();
        let tr = solve_nonlinear(&s0, &c, &AlignmentField::Regularized { eps0: 0.01 }, &KineticConfig::new(0.01, 0.5)).unwrap();
        for s in &tr.snapshots {
            assert!((s.mass() - m0).abs() < 1e-10 * m0);
            assert!(s.min() >= -1e-12);
        }
        assert_eq!(tr.snapshots.len(), 51);
        assert_eq!(tr.flux_records.len(), 51);
    }
}
