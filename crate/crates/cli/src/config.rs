//! Experiment configuration: TOML schema, defaults and validation.
//!
//! Unknown keys and duplicate keys are rejected by the parser. Values that
//! parse but break an invariant are reported with their dotted key path.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vicsek_core::coefficients::{CoefficientSet, RegularizationSpec};
use vicsek_core::kinetic::{AlignmentField, KineticConfig, ThetaMode};
use vicsek_core::meanfield::CouplingConfig;
use vicsek_core::particles::{Domain, InitialSpec, ItoCorrectionSign, OrientationLaw, Scheme, SimConfig, SpatialLaw, Variant};
use vicsek_core::presets::Preset;

use crate::error::CliError;

/// 64-bit master seed; every random stream is derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MasterSeed(pub u64);

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: MasterSeed,
    /// Output directory, overridden by `--out`.
    pub out: Option<PathBuf>,
    pub model: ModelSection,
    #[serde(default = "default_regularization")]
    pub regularization: RegularizationSpec,
    #[serde(default = "default_initial")]
    pub initial: InitialSpec,
    #[serde(default = "default_domain")]
    pub domain: Domain,
    #[serde(default)]
    pub constants: ConstantsSection,
    pub particles: Option<ParticlesSection>,
    pub kinetic: Option<KineticSection>,
    pub coupling: Option<CouplingSection>,
    pub sweep: Option<SweepSection>,
    pub fluxprob: Option<FluxProbSection>,
}

/// Either a preset with `nu`/`sigma` (and optional `alpha`/`speed` overrides)
/// or a full `[model.coefficients]` table.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub preset: Option<Preset>,
    pub nu: Option<f64>,
    pub sigma: Option<f64>,
    pub alpha: Option<f64>,
    pub speed: Option<f64>,
    pub coefficients: Option<CoefficientSet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSection {
    /// Exponent of the Lᵖ growth constant.
    #[serde(default = "default_p")]
    pub p: f64,
    /// Horizons at which `c*(T)` and `Λ(T)` are reported.
    #[serde(default)]
    pub horizons: Vec<f64>,
    #[serde(default = "default_n_theta")]
    pub n_theta: usize,
    #[serde(default = "default_n_x")]
    pub n_x: usize,
}

impl Default for ConstantsSection {
    fn default() -> Self {
        Self {
            p: default_p(),
            horizons: Vec::new(),
            n_theta: default_n_theta(),
            n_x: default_n_x(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticlesSection {
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub n: usize,
    #[serde(default = "default_replicas")]
    pub replicas: u64,
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
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KineticSection {
    #[serde(default = "default_kinetic_n_theta")]
    pub n_theta: usize,
    #[serde(default = "default_n_x")]
    pub n_x: usize,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_theta_mode")]
    pub theta_mode: ThetaMode,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    #[serde(default = "default_field")]
    pub field: AlignmentField,
    /// Bound on `max |ΔF/Δt + D| / (1 + |D|)` enforced by `energy`.
    #[serde(default = "default_energy_tol")]
    pub energy_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSection {
    #[serde(default = "default_coupling_n")]
    pub n: usize,
    #[serde(default)]
    pub replica: u64,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default = "default_variant")]
    pub variant: Variant,
    #[serde(default = "default_true")]
    pub renormalize: bool,
    #[serde(default = "default_n_theta")]
    pub n_theta: usize,
    #[serde(default = "default_n_x")]
    pub n_x: usize,
    #[serde(default = "default_field")]
    pub kinetic_field: AlignmentField,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub ns: Vec<usize>,
    pub replicas: u64,
}

/// Horizon and threshold are given either absolutely or as fractions of `T₁` and `c*(T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxProbSection {
    pub ns: Vec<usize>,
    pub replicas: u64,
    pub t_end: Option<f64>,
    pub horizon_fraction: Option<f64>,
    pub eps0: Option<f64>,
    pub eps0_fraction: Option<f64>,
    /// `ε̂(N)` fed into the probability floor; the floor column is NaN without it.
    pub eps_hat: Option<f64>,
}

fn default_regularization() -> RegularizationSpec {
    RegularizationSpec::new(0.05).expect("valid default")
}
fn default_initial() -> InitialSpec {
    InitialSpec {
        orientation: OrientationLaw::VonMises { kappa: 2.0 },
        spatial: SpatialLaw::Point,
    }
}
fn default_domain() -> Domain {
    Domain::Free
}
fn default_p() -> f64 {
    2.0
}
fn default_n_theta() -> usize {
    256
}
fn default_kinetic_n_theta() -> usize {
    128
}
fn default_n_x() -> usize {
    64
}
fn default_dim() -> usize {
    2
}
fn default_replicas() -> u64 {
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
fn default_ito_sign() -> ItoCorrectionSign {
    ItoCorrectionSign::Derived
}
fn default_stride() -> usize {
    1
}
fn default_theta_mode() -> ThetaMode {
    ThetaMode::Implicit
}
fn default_field() -> AlignmentField {
    AlignmentField::Exact
}
fn default_energy_tol() -> f64 {
    5e-3
}
fn default_coupling_n() -> usize {
    256
}

/// Resolved model echoed into the manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedModel {
    pub preset: Option<&'static str>,
    pub coefficients: CoefficientSet,
}

/// The configuration after defaults, preset expansion and validation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub seed: MasterSeed,
    pub model: ResolvedModel,
    pub regularization: RegularizationSpec,
    pub initial: InitialSpec,
    pub domain: Domain,
    pub constants: ConstantsSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub particles: Option<ParticlesSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kinetic: Option<KineticSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling: Option<CouplingSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fluxprob: Option<FluxProbSection>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::ConfigRead {
        path: path.display().to_string(),
        source,
    })?;
    parse_str(&text)
}

pub fn parse_str(text: &str) -> Result<ExperimentConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::ConfigSyntax(e.to_string().trim_end().to_string()))
}

fn positive(key: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::schema(key, format!("must be positive, got {v}")))
    }
}

fn nonnegative(key: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(CliError::schema(key, format!("must be nonnegative, got {v}")))
    }
}

fn at_least_one(key: &str, v: u64) -> Result<(), CliError> {
    if v >= 1 {
        Ok(())
    } else {
        Err(CliError::schema(key, "must be at least 1"))
    }
}

fn increasing(key: &str, ns: &[usize]) -> Result<(), CliError> {
    if ns.is_empty() || ns[0] == 0 || ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::schema(key, "must be a non-empty, strictly increasing list of positive counts"));
    }
    Ok(())
}

impl ModelSection {
    fn resolve(&self, dim: usize) -> Result<ResolvedModel, CliError> {
        let (preset, mut c) = match (&self.preset, &self.coefficients) {
            (Some(p), None) => {
                let nu = self.nu.unwrap_or(1.0);
                let sigma = self.sigma.unwrap_or(1.0);
                nonnegative("model.nu", nu)?;
                nonnegative("model.sigma", sigma)?;
                (Some(p.name()), p.coefficients(nu, sigma))
            }
            (None, Some(c)) => {
                if self.nu.is_some() || self.sigma.is_some() {
                    return Err(CliError::schema("model", "nu and sigma only apply to presets"));
                }
                (None, c.clone())
            }
            (Some(_), Some(_)) => {
                return Err(CliError::schema("model", "give either preset or coefficients, not both"))
            }
            (None, None) => return Err(CliError::schema("model", "one of preset or coefficients is required")),
        };
        if let Some(a) = self.alpha {
            c.alpha = a;
        }
        if let Some(s) = self.speed {
            c.speed = s;
        }
        if !(0.0..=1.0).contains(&c.alpha) {
            return Err(CliError::schema("model.alpha", format!("must lie in [0, 1], got {}", c.alpha)));
        }
        c.validate_basic(dim)
            .map_err(|e| CliError::schema("model", e.to_string()))?;
        Ok(ResolvedModel { preset, coefficients: c })
    }
}

impl ExperimentConfig {
    /// Applies command-line overrides, expands the preset and validates every present section.
    pub fn resolve(self, seed: Option<u64>, out: Option<PathBuf>) -> Result<ResolvedConfig, CliError> {
        let dim = self.particles.as_ref().map_or(2, |p| p.dim);
        if !(dim == 2 || dim == 3) {
            return Err(CliError::schema("particles.dim", format!("must be 2 or 3, got {dim}")));
        }
        let model = self.model.resolve(dim)?;
        positive("regularization.eps0", self.regularization.eps0)?;
        RegularizationSpec::new(self.regularization.eps0).map_err(|e| CliError::schema("regularization", e.to_string()))?;
        self.domain
            .validate(dim)
            .map_err(|e| CliError::schema("domain", e.to_string()))?;
        positive("constants.p", self.constants.p)?;
        for h in &self.constants.horizons {
            nonnegative("constants.horizons", *h)?;
        }
        if let Some(p) = &self.particles {
            if p.n == 0 {
                return Err(CliError::schema("particles.n", "must be at least 1"));
            }
            at_least_one("particles.replicas", p.replicas)?;
            positive("particles.dt", p.dt)?;
            nonnegative("particles.t_end", p.t_end)?;
            at_least_one("particles.snapshot_stride", p.snapshot_stride as u64)?;
        }
        if let Some(k) = &self.kinetic {
            positive("kinetic.dt", k.dt)?;
            nonnegative("kinetic.t_end", k.t_end)?;
            at_least_one("kinetic.snapshot_stride", k.snapshot_stride as u64)?;
            positive("kinetic.energy_tol", k.energy_tol)?;
            k.field
                .validate()
                .map_err(|e| CliError::schema("kinetic.field", e.to_string()))?;
        }
        if let Some(c) = &self.coupling {
            positive("coupling.dt", c.dt)?;
            nonnegative("coupling.t_end", c.t_end)?;
            at_least_one("coupling.snapshot_stride", c.snapshot_stride as u64)?;
            if c.variant == Variant::Auxiliary {
                return Err(CliError::schema("coupling.variant", "the auxiliary variant is driven internally"));
            }
        }
        if let Some(s) = &self.sweep {
            increasing("sweep.ns", &s.ns)?;
            at_least_one("sweep.replicas", s.replicas)?;
        }
        if let Some(f) = &self.fluxprob {
            increasing("fluxprob.ns", &f.ns)?;
            at_least_one("fluxprob.replicas", f.replicas)?;
            match (f.t_end, f.horizon_fraction) {
                (Some(t), None) => nonnegative("fluxprob.t_end", t)?,
                (None, Some(h)) if (0.0..1.0).contains(&h) => {}
                (None, Some(h)) => {
                    return Err(CliError::schema("fluxprob.horizon_fraction", format!("must lie in [0, 1), got {h}")))
                }
                _ => return Err(CliError::schema("fluxprob", "give exactly one of t_end or horizon_fraction")),
            }
            match (f.eps0, f.eps0_fraction) {
                (Some(e), None) => positive("fluxprob.eps0", e)?,
                (None, Some(e)) if e > 0.0 && e < 1.0 => {}
                (None, Some(e)) => {
                    return Err(CliError::schema("fluxprob.eps0_fraction", format!("must lie in (0, 1), got {e}")))
                }
                _ => return Err(CliError::schema("fluxprob", "give exactly one of eps0 or eps0_fraction")),
            }
        }
        Ok(ResolvedConfig {
            seed: seed.map_or(self.seed, MasterSeed),
            model,
            regularization: self.regularization,
            initial: self.initial,
            domain: self.domain,
            constants: self.constants,
            particles: self.particles,
            kinetic: self.kinetic,
            coupling: self.coupling,
            sweep: self.sweep,
            fluxprob: self.fluxprob,
            out: out.or(self.out),
        })
    }
}

impl ResolvedConfig {
    pub fn coefficients(&self) -> &CoefficientSet {
        &self.model.coefficients
    }

    pub fn section<'a, T>(&self, section: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        section
            .as_ref()
            .ok_or_else(|| CliError::schema(name, "section is required by this subcommand"))
    }

    pub fn sim_config(&self, p: &ParticlesSection) -> SimConfig {
        SimConfig {
            dt: p.dt,
            t_end: p.t_end,
            scheme: p.scheme,
            variant: p.variant,
            renormalize: p.renormalize,
            ito_sign: p.ito_sign,
            domain: self.domain.clone(),
            snapshot_stride: p.snapshot_stride,
        }
    }

    pub fn kinetic_config(k: &KineticSection) -> KineticConfig {
        KineticConfig {
            dt: k.dt,
            t_end: k.t_end,
            theta_mode: k.theta_mode,
            snapshot_stride: k.snapshot_stride,
        }
    }

    pub fn coupling_config(&self, c: &CouplingSection) -> CouplingConfig {
        CouplingConfig {
            dt: c.dt,
            t_end: c.t_end,
            snapshot_stride: c.snapshot_stride,
            scheme: c.scheme,
            variant: c.variant,
            renormalize: c.renormalize,
            domain: self.domain.clone(),
            initial: self.initial,
            n_theta: c.n_theta,
            n_x: c.n_x,
            kinetic_field: c.kinetic_field,
        }
    }
}
