use serde::{Deserialize, Serialize};

use super::sampling::{sample_initial, InitialSpec};
use super::step::{step_particles, ItoCorrectionSign, MeanField, Scheme, StepOptions, Variant};
use super::{Domain, NoiseSource, ParticleEnsemble};
use crate::coefficients::{CoefficientSet, FluxSource, RegularizationSpec, SpatialMeasure};
use crate::error::{Result, VicsekError};
use crate::Vector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default = "default_variant")]
    pub variant: Variant,
    #[serde(default = "default_true")]
    pub renormalize: bool,
    #[serde(default = "default_ito_sign")]
    pub ito_sign: ItoCorrectionSign,
    pub domain: Domain,
    /// Record a snapshot every `snapshot_stride` steps (and at the final step).
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
}

fn default_scheme() -> Scheme {
    Scheme::StratonovichHeun
}
fn default_variant() -> Variant {
    Variant::Approximated
}
fn default_true() -> bool {
    true
}
fn default_ito_sign() -> ItoCorrectionSign {
    ItoCorrectionSign::Derived
}
fn default_stride() -> usize {
    1
}

impl SimConfig {
    pub fn step_options(&self) -> StepOptions {
        StepOptions {
            scheme: self.scheme,
            variant: self.variant,
            renormalize: self.renormalize,
            ito_sign: self.ito_sign,
        }
    }

    /// Number of steps `round(T/dt)`.
    pub fn n_steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }

    /// Hard errors for invalid values; returns soft warnings (stability guard).
    pub fn validate(&self, coeffs: &CoefficientSet, dim: usize) -> Result<Vec<String>> {
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
        self.domain.validate(dim)?;
        let mut warnings = Vec::new();
        if self.t_end > 0.0 && self.t_end < self.dt {
            warnings.push(format!("t_end = {} is shorter than dt = {}", self.t_end, self.dt));
        }
        let nu_inf = coeffs.bounds(dim, 1.0, SpatialMeasure::Homogeneous).nu_inf;
        if self.dt * nu_inf > 0.1 {
            warnings.push(format!(
                "dt * nu_inf = {} exceeds the stability guard 0.1",
                self.dt * nu_inf
            ));
        }
        Ok(warnings)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot<const D: usize> {
    pub t: f64,
    pub positions: Vec<Vector<D>>,
    pub velocities: Vec<Vector<D>>,
    /// `|J(μ^N)(X^i, V^i)|` per particle.
    pub flux_norms: Vec<f64>,
    pub mean_velocity_norm: f64,
    pub min_flux_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<const D: usize> {
    pub replica: u64,
    pub snapshots: Vec<Snapshot<D>>,
    pub warnings: Vec<String>,
}

fn snapshot<const D: usize>(e: &ParticleEnsemble<D>, coeffs: &CoefficientSet) -> Snapshot<D> {
    let moments = e.moments_batch(&coeffs.kernel, &e.positions);
    let flux_norms: Vec<f64> = moments
        .iter()
        .zip(&e.velocities)
        .map(|(m, v)| m.flux(v).norm())
        .collect();
    Snapshot {
        t: e.t,
        positions: e.positions.clone(),
        velocities: e.velocities.clone(),
        min_flux_norm: flux_norms.iter().copied().fold(f64::INFINITY, f64::min),
        flux_norms,
        mean_velocity_norm: e.mean_velocity().norm(),
    }
}

/// Runs the particle system from a given initial ensemble.
pub fn simulate_from<const D: usize>(
    config: &SimConfig,
    coeffs: &CoefficientSet,
    reg: &RegularizationSpec,
    mut ensemble: ParticleEnsemble<D>,
    noise: NoiseSource,
) -> Result<Trajectory<D>> {
    coeffs.validate_basic(D)?;
    reg.validate()?;
    let warnings = config.validate(coeffs, D)?;
    if config.variant == Variant::Auxiliary {
        return Err(VicsekError::InvalidInput(
            "the auxiliary variant needs a kinetic path; use the coupling driver".into(),
        ));
    }
    let opts = config.step_options();
    let n = config.n_steps();
    let t0 = ensemble.t;
    let mut snapshots = vec![snapshot(&ensemble, coeffs)];
    for k in 0..n {
        step_particles(&mut ensemble, MeanField::Empirical, coeffs, reg, &opts, &noise, k, config.dt)?;
        ensemble.t = t0 + (k + 1) as f64 * config.dt;
        if (k + 1) % config.snapshot_stride as u64 == 0 || k + 1 == n {
            snapshots.push(snapshot(&ensemble, coeffs));
        }
    }
    Ok(Trajectory {
        replica: noise.replica,
        snapshots,
        warnings,
    })
}

/// Samples `n` particles from `initial` and runs them; deterministic in `(seed, replica)`.
pub fn simulate<const D: usize>(
    config: &SimConfig,
    coeffs: &CoefficientSet,
    reg: &RegularizationSpec,
    initial: &InitialSpec,
    n: usize,
    seed: u64,
    replica: u64,
) -> Result<Trajectory<D>> {
    let ensemble = sample_initial::<D>(initial, &config.domain, n, seed, replica)?;
    simulate_from(config, coeffs, reg, ensemble, NoiseSource::new(seed, replica))
}
