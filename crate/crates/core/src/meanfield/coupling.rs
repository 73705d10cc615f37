//! Paired runs of the particle system and the auxiliary process on shared noise.

use serde::{Deserialize, Serialize};

use super::wasserstein::w2_empirical_to_density;
use crate::coefficients::{CoefficientSet, RegularizationSpec};
use crate::error::{Result, VicsekError};
use crate::geometry::SphereGridS1;
use crate::kinetic::{solve_nonlinear, AlignmentField, KineticConfig, KineticState, KineticTrajectory, SpatialGrid};
use crate::particles::{
    sample_initial, step_auxiliary, step_particles, Domain, InitialSpec, KineticPath, MeanField, NoiseSource,
    OrientationLaw, ParticleEnsemble, Scheme, SpatialLaw, StepOptions, Variant,
};
use crate::presets;
use crate::Vector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Sampling stride of the `sup over t` and `inf over t` proxies.
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    /// Normalised field used by the particle side.
    #[serde(default = "default_variant")]
    pub variant: Variant,
    #[serde(default = "default_true")]
    pub renormalize: bool,
    #[serde(default = "default_domain")]
    pub domain: Domain,
    pub initial: InitialSpec,
    #[serde(default = "default_n_theta")]
    pub n_theta: usize,
    /// Cells of the kinetic grid along `x₁` when the domain is a torus.
    #[serde(default = "default_n_x")]
    pub n_x: usize,
    /// Field driving the kinetic reference solution.
    #[serde(default = "default_field")]
    pub kinetic_field: AlignmentField,
}

fn default_stride() -> usize {
    1
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
fn default_domain() -> Domain {
    Domain::Free
}
fn default_n_theta() -> usize {
    256
}
fn default_n_x() -> usize {
    64
}
fn default_field() -> AlignmentField {
    AlignmentField::Exact
}

impl CouplingConfig {
    /// Homogeneous von Mises start with otherwise default settings.
    pub fn homogeneous(dt: f64, t_end: f64, kappa: f64) -> Self {
        Self {
            dt,
            t_end,
            snapshot_stride: 1,
            scheme: Scheme::StratonovichHeun,
            variant: Variant::Approximated,
            renormalize: true,
            domain: Domain::Free,
            initial: InitialSpec {
                orientation: OrientationLaw::VonMises { kappa },
                spatial: SpatialLaw::Point,
            },
            n_theta: default_n_theta(),
            n_x: default_n_x(),
            kinetic_field: AlignmentField::Exact,
        }
    }

    pub fn n_steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }

    pub fn step_options(&self) -> StepOptions {
        StepOptions {
            scheme: self.scheme,
            variant: self.variant,
            renormalize: self.renormalize,
            ..StepOptions::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0 && self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(VicsekError::InvalidInput(format!(
                "need dt > 0 and t_end >= 0, got dt = {}, t_end = {}",
                self.dt, self.t_end
            )));
        }
        if self.snapshot_stride == 0 {
            return Err(VicsekError::InvalidInput("snapshot_stride must be at least 1".into()));
        }
        if self.variant == Variant::Auxiliary {
            return Err(VicsekError::InvalidInput(
                "the particle side of a coupling cannot use the auxiliary variant".into(),
            ));
        }
        self.domain.validate(2)?;
        self.initial.validate()
    }
}

/// Kinetic counterpart of a particle initial law on (point or 1D torus) × S¹.
pub fn kinetic_initial(spec: &InitialSpec, domain: &Domain, n_theta: usize, n_x: usize) -> Result<KineticState> {
    let grid = SphereGridS1::new(n_theta)?;
    let (spatial, weight): (SpatialGrid, Box<dyn Fn(f64) -> f64>) = match (spec.spatial, domain) {
        (SpatialLaw::Point, _) => (SpatialGrid::Homogeneous, Box::new(|_| 1.0)),
        (SpatialLaw::Uniform, Domain::Torus { lengths }) => {
            (SpatialGrid::Torus1D { n_x, length: lengths[0] }, Box::new(|_| 1.0))
        }
        (SpatialLaw::Cosine { amplitude }, Domain::Torus { lengths }) => {
            let l = lengths[0];
            (
                SpatialGrid::Torus1D { n_x, length: l },
                Box::new(move |x| 1.0 + amplitude * (std::f64::consts::TAU * x / l).cos()),
            )
        }
        _ => {
            return Err(VicsekError::Unsupported(
                "kinetic reference needs a point start or a uniform/cosine start on a torus".into(),
            ))
        }
    };
    let orient = match spec.orientation {
        OrientationLaw::Uniform => presets::vonmises_state(SpatialGrid::Homogeneous, grid.clone(), 0.0)?,
        OrientationLaw::VonMises { kappa } => presets::vonmises_state(SpatialGrid::Homogeneous, grid.clone(), kappa)?,
        OrientationLaw::PerturbedVonMises { kappa, epsilon } => {
            presets::perturbed_vonmises_state(SpatialGrid::Homogeneous, grid.clone(), kappa, epsilon)?
        }
    };
    let mut state = KineticState::from_fn(spatial, grid, |x, _| weight(x))?;
    for i in 0..state.n_x() {
        for (v, o) in state.slice_mut(i).iter_mut().zip(&orient.f) {
            *v *= o;
        }
    }
    let m = state.mass();
    state.f.iter_mut().for_each(|v| *v /= m);
    Ok(state)
}

/// Kinetic solution `f_t` on `[0, T]` with one snapshot per particle step.
#[derive(Debug, Clone)]
pub struct KineticReference {
    pub trajectory: KineticTrajectory,
    pub path: KineticPath,
}

impl KineticReference {
    pub fn solve(config: &CouplingConfig, coeffs: &CoefficientSet) -> Result<Self> {
        config.validate()?;
        let f0 = kinetic_initial(&config.initial, &config.domain, config.n_theta, config.n_x)?;
        let kc = KineticConfig::new(config.dt, config.dt * config.n_steps() as f64);
        let trajectory = solve_nonlinear(&f0, coeffs, &config.kinetic_field, &kc)?;
        let path = if trajectory.snapshots.len() > 1 {
            KineticPath::new(&trajectory.snapshots, coeffs)?
        } else {
            // zero horizon: a constant path still serves `at(0)`
            let mut later = f0.clone();
            later.t = config.dt;
            KineticPath::new(&[f0, later], coeffs)?
        };
        Ok(Self { trajectory, path })
    }

    pub fn final_state(&self) -> &KineticState {
        self.trajectory.snapshots.last().expect("trajectory has its initial snapshot")
    }
}

/// One replica of the coupling experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingReplica {
    pub n: usize,
    pub replica: u64,
    /// `sup_t (1/N) Σᵢ (|Xⁱ − X̄ⁱ|² + |Vⁱ − V̄ⁱ|²)` over sampled times.
    pub sup_t_msd: f64,
    /// `W₂(μ^N_V(T), f_T)` on S¹ (NaN off homogeneous runs).
    pub w2_final: f64,
    /// `inf` over sampled times and particles of `|J(μ^N)(Xⁱ, Vⁱ)|`.
    pub min_flux: f64,
    /// `(1/N) Σ V¹ − ∫ ω₁ f_T`.
    pub observable_error: f64,
}

fn msd(a: &ParticleEnsemble<2>, b: &ParticleEnsemble<2>) -> f64 {
    let s: f64 = a
        .positions
        .iter()
        .zip(&b.positions)
        .zip(a.velocities.iter().zip(&b.velocities))
        .map(|((x, y), (v, w))| a.domain.displacement(x, y).norm_squared() + (v - w).norm_squared())
        .sum();
    s / a.len() as f64
}

fn mean_first_component(state: &KineticState) -> f64 {
    let mut s = 0.0;
    for i in 0..state.n_x() {
        for (k, v) in state.slice(i).iter().enumerate() {
            s += v * state.grid.omega(k)[0];
        }
    }
    s * state.cell_volume() / state.mass()
}

/// Runs `N` particles and their auxiliary twins from identical draws with identical noise.
pub fn coupled_run(
    n: usize,
    replica: u64,
    seed: u64,
    config: &CouplingConfig,
    coeffs: &CoefficientSet,
    reg: &RegularizationSpec,
    reference: &KineticReference,
) -> Result<CouplingReplica> {
    config.validate()?;
    coeffs.validate_basic(2)?;
    let steps = config.n_steps();
    let horizon = config.dt * steps as f64;
    if horizon > reference.path.end() + 1e-9 * (1.0 + horizon) {
        return Err(VicsekError::InvalidHorizon {
            t: horizon,
            limit: reference.path.end(),
        });
    }
    let mut particles = sample_initial::<2>(&config.initial, &config.domain, n, seed, replica)?;
    let mut twins = particles.clone();
    let noise = NoiseSource::new(seed, replica);
    let opts = config.step_options();
    let mut sup_msd = 0.0f64;
    let mut min_flux = f64::INFINITY;
    for k in 0..steps {
        let rep = step_particles(&mut particles, MeanField::Empirical, coeffs, reg, &opts, &noise, k, config.dt)?;
        if k % config.snapshot_stride as u64 == 0 {
            min_flux = min_flux.min(rep.min_flux_norm);
        }
        step_auxiliary(&mut twins, &reference.path, coeffs, reg, &opts, &noise, k, config.dt)?;
        let t = (k + 1) as f64 * config.dt;
        particles.t = t;
        twins.t = t;
        if (k + 1) % config.snapshot_stride as u64 == 0 || k + 1 == steps {
            sup_msd = sup_msd.max(msd(&particles, &twins));
        }
    }
    // flux at the final state
    let final_flux = crate::coefficients::FluxSource::moments_batch(&particles, &coeffs.kernel, &particles.positions)
        .iter()
        .zip(&particles.velocities)
        .map(|(m, v)| m.flux(v).norm())
        .fold(f64::INFINITY, f64::min);
    min_flux = min_flux.min(final_flux);

    let f_t = reference.final_state();
    let w2_final = if f_t.spatial.is_homogeneous() {
        w2_empirical_to_density(&particles.velocities, f_t)?
    } else {
        f64::NAN
    };
    let mean_v1: f64 = particles.velocities.iter().map(|v: &Vector<2>| v[0]).sum::<f64>() / n as f64;
    Ok(CouplingReplica {
        n,
        replica,
        sup_t_msd: sup_msd,
        w2_final,
        min_flux,
        observable_error: mean_v1 - mean_first_component(f_t),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{Friction, Kernel, OrientationProfile, SpatialProfile, Viscosity};

    fn reg() -> RegularizationSpec {
        RegularizationSpec::new(0.05).unwrap()
    }

    #[test]
    fn measure_independent_coefficients_never_separate() {
        let c = CoefficientSet {
            speed: 1.0,
            alpha: 0.0,
            kernel: Kernel::new(SpatialProfile::Uniform, OrientationProfile::Constant { value: vec![0.0, 0.0] }),
            friction: Friction::Constant { value: -1.0 },
            viscosity: Viscosity::Constant { value: 0.7 },
        };
        let mut cfg = CouplingConfig::homogeneous(0.01, 0.3, 2.0);
        cfg.kinetic_field = AlignmentField::Regularized { eps0: 0.05 };
        cfg.n_theta = 64;
        let r = KineticReference::solve(&cfg, &c).unwrap();
        let rec = coupled_run(32, 0, 5, &cfg, &c, &reg(), &r).unwrap();
        assert_eq!(rec.sup_t_msd, 0.0);
    }

    #[test]
    fn zero_horizon_gives_zero_deviation() {
        let c = presets::classic_vicsek(1.0, 1.0);
        let mut cfg = CouplingConfig::homogeneous(0.01, 0.0, 2.0);
        cfg.n_theta = 64;
        let r = KineticReference::solve(&cfg, &c).unwrap();
        let rec = coupled_run(16, 0, 1, &cfg, &c, &reg(), &r).unwrap();
        assert_eq!(rec.sup_t_msd, 0.0);
    }

    #[test]
    fn coupling_is_deterministic_and_small() {
        let c = presets::classic_vicsek(1.0, 1.0);
        let mut cfg = CouplingConfig::homogeneous(0.01, 0.2, 2.0);
        cfg.n_theta = 128;
        let r = KineticReference::solve(&cfg, &c).unwrap();
        let a = coupled_run(64, 3, 9, &cfg, &c, &reg(), &r).unwrap();
        let b = coupled_run(64, 3, 9, &cfg, &c, &reg(), &r).unwrap();
        assert_eq!(a, b);
        assert!(a.sup_t_msd > 0.0 && a.sup_t_msd < 0.1);
        assert!(a.w2_final.is_finite());
    }

    #[test]
    fn horizon_beyond_reference_is_rejected() {
        let c = presets::classic_vicsek(1.0, 1.0);
        let mut cfg = CouplingConfig::homogeneous(0.01, 0.1, 2.0);
        cfg.n_theta = 64;
        let r = KineticReference::solve(&cfg, &c).unwrap();
        cfg.t_end = 0.2;
        assert!(matches!(
            coupled_run(8, 0, 0, &cfg, &c, &reg(), &r),
            Err(VicsekError::InvalidHorizon { .. })
        ));
    }

    #[test]
    fn kinetic_initial_matches_cosine_law() {
        let spec = InitialSpec {
            orientation: OrientationLaw::Uniform,
            spatial: SpatialLaw::Cosine { amplitude: 0.5 },
        };
        let s = kinetic_initial(&spec, &Domain::torus(2.0, 2), 16, 32).unwrap();
        assert!((s.mass() - 1.0).abs() < 1e-12);
        assert!(kinetic_initial(&spec, &Domain::Free, 16, 32).is_err());
    }
}
