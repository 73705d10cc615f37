//! One time step of the particle systems.
//!
//! Stratonovich form of the velocity equation:
//! `dV = (−ν P τ + ½ P ∇_vσ) dt + √(2σ) P ∘ dB`, with `P = P_{V⊥}`.
//! Itô form: `dV = (−ν P τ + P ∇_vσ − (d−1) σ V/|V|²) dt + √(2σ) P dB`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{NoiseSource, ParticleEnsemble};
use crate::coefficients::{
    gamma, tau1, tau2, CoefficientSet, FluxSource, Moments, RegularizationSpec, SINGULAR_FLUX_TOL,
};
use crate::error::{Result, VicsekError};
use crate::geometry::projector;
use crate::{Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Heun predictor-corrector with the increment reused in both stages.
    StratonovichHeun,
    /// Euler-Maruyama on the Itô form.
    ItoProjected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// `τ_{ε₀}` in place of `Ψ`, exact projection.
    Approximated,
    /// `Ψ = J/|J|_α`; fails where the flux vanishes for α = 0.
    VicsekExact,
    /// `τ₀` for the alignment target, `τ₁` for the projection, `τ₂` in the Itô correction.
    Regularized,
    /// As `Approximated` with the flux taken from a kinetic density.
    Auxiliary,
}

/// Sign of the Itô drift correction. `Flipped` exists for negative controls only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ItoCorrectionSign {
    Derived,
    Flipped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepOptions {
    pub scheme: Scheme,
    pub variant: Variant,
    pub renormalize: bool,
    pub ito_sign: ItoCorrectionSign,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            scheme: Scheme::StratonovichHeun,
            variant: Variant::Approximated,
            renormalize: true,
            ito_sign: ItoCorrectionSign::Derived,
        }
    }
}

/// Where the flux entering the coefficients comes from.
#[derive(Clone, Copy)]
pub enum MeanField<'a, const D: usize> {
    /// The ensemble's own empirical measure.
    Empirical,
    /// A prescribed field at the start and at the end of the step.
    External {
        now: &'a dyn FluxSource<D>,
        next: &'a dyn FluxSource<D>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    /// `|J(X^i, V^i)|` at the start of the step.
    pub flux_norms: Vec<f64>,
    pub min_flux_norm: f64,
}

struct Local<const D: usize> {
    drift: Vector<D>,
    amp: f64,
    proj: Matrix<D>,
    flux_norm: f64,
}

#[allow(clippy::too_many_arguments)]
fn local<const D: usize>(
    v: &Vector<D>,
    m: &Moments<D>,
    coeffs: &CoefficientSet,
    reg: &RegularizationSpec,
    opts: &StepOptions,
    ito: bool,
    time: f64,
    particle: usize,
) -> Result<Local<D>> {
    let regularized = opts.variant == Variant::Regularized;
    let q = if regularized { gamma(v, reg.gamma_radius) } else { *v };
    let j = m.flux(&q);
    let s = j.norm();
    let lc = coeffs.local(s);
    let alpha = coeffs.alpha;
    let tau = if opts.variant == Variant::VicsekExact {
        if alpha == 0.0 && s < SINGULAR_FLUX_TOL {
            return Err(VicsekError::SingularFlux {
                time,
                particle: Some(particle),
                flux_norm: s,
                blowup: if s > 0.0 { lc.nu.abs() / s } else { f64::INFINITY },
            });
        }
        j / (alpha + (1.0 - alpha) * s)
    } else {
        reg.tau_of_flux(&j, alpha)
    };
    let proj = if regularized { tau1(v, reg) } else { projector(v) };
    let dsigma = coeffs.viscosity.derivative(s);
    let grad_sigma = if dsigma != 0.0 && s > 0.0 {
        m.b.transpose() * j * (dsigma / s)
    } else {
        Vector::zeros()
    };
    let mut drift = proj * (tau * (-lc.nu));
    if ito {
        drift += proj * grad_sigma;
        let w = if regularized {
            tau2(v, reg)
        } else {
            v / v.norm_squared()
        };
        let sign = match opts.ito_sign {
            ItoCorrectionSign::Derived => -1.0,
            ItoCorrectionSign::Flipped => 1.0,
        };
        drift += w * (sign * (D as f64 - 1.0) * lc.sigma);
    } else {
        drift += proj * grad_sigma * 0.5;
    }
    Ok(Local {
        drift,
        amp: (2.0 * lc.sigma).sqrt(),
        proj,
        flux_norm: s,
    })
}

#[allow(clippy::too_many_arguments)]
fn locals<const D: usize>(
    xs: &[Vector<D>],
    vs: &[Vector<D>],
    source: &dyn FluxSource<D>,
    coeffs: &CoefficientSet,
    reg: &RegularizationSpec,
    opts: &StepOptions,
    ito: bool,
    time: f64,
) -> Result<Vec<Local<D>>> {
    let moments = source.moments_batch(&coeffs.kernel, xs);
    let out: Vec<Result<Local<D>>> = vs
        .par_iter()
        .zip(moments.par_iter())
        .enumerate()
        .map(|(i, (v, m))| local(v, m, coeffs, reg, opts, ito, time, i))
        .collect();
    out.into_iter().collect()
}

/// Advances `ensemble` by `dt`. Brownian increments are addressed by
/// `(noise, stream_id, step_index)` so paired runs can share them.
#[allow(clippy::too_many_arguments)]
pub fn step_particles<const D: usize>(
    ensemble: &mut ParticleEnsemble<D>,
    field: MeanField<'_, D>,
    coeffs: &CoefficientSet,
    reg: &RegularizationSpec,
    opts: &StepOptions,
    noise: &NoiseSource,
    step_index: u64,
    dt: f64,
) -> Result<StepReport> {
    if ensemble.is_empty() {
        return Err(VicsekError::EmptyEnsemble);
    }
    let c = coeffs.speed;
    let t = ensemble.t;
    let ito = opts.scheme == Scheme::ItoProjected;
    let now: &dyn FluxSource<D> = match field {
        MeanField::Empirical => &*ensemble,
        MeanField::External { now, .. } => now,
    };
    let l0 = locals(
        &ensemble.positions,
        &ensemble.velocities,
        now,
        coeffs,
        reg,
        opts,
        ito,
        t,
    )?;
    let db: Vec<Vector<D>> = ensemble
        .stream_ids
        .par_iter()
        .map(|&s| noise.increment::<D>(s, step_index, dt))
        .collect();
    let flux_norms: Vec<f64> = l0.iter().map(|l| l.flux_norm).collect();
    let min_flux_norm = flux_norms.iter().copied().fold(f64::INFINITY, f64::min);

    let euler = |l: &Local<D>, v: &Vector<D>, db: &Vector<D>| v + l.drift * dt + l.proj * db * l.amp;

    let (new_x, new_v): (Vec<Vector<D>>, Vec<Vector<D>>) = if ito {
        let v = l0
            .iter()
            .zip(&ensemble.velocities)
            .zip(&db)
            .map(|((l, v), db)| euler(l, v, db))
            .collect();
        let x = ensemble
            .positions
            .iter()
            .zip(&ensemble.velocities)
            .map(|(x, v)| x + v * (c * dt))
            .collect();
        (x, v)
    } else {
        let v_pred: Vec<Vector<D>> = l0
            .iter()
            .zip(&ensemble.velocities)
            .zip(&db)
            .map(|((l, v), db)| euler(l, v, db))
            .collect();
        let mut x_pred: Vec<Vector<D>> = ensemble
            .positions
            .iter()
            .zip(&ensemble.velocities)
            .map(|(x, v)| x + v * (c * dt))
            .collect();
        for x in x_pred.iter_mut() {
            ensemble.domain.wrap(x);
        }
        let predicted;
        let next: &dyn FluxSource<D> = match field {
            MeanField::Empirical => {
                predicted = ParticleEnsemble {
                    positions: x_pred.clone(),
                    velocities: v_pred.clone(),
                    t: t + dt,
                    stream_ids: ensemble.stream_ids.clone(),
                    domain: ensemble.domain.clone(),
                };
                &predicted
            }
            MeanField::External { next, .. } => next,
        };
        let l1 = locals(&x_pred, &v_pred, next, coeffs, reg, opts, false, t + dt)?;
        let v = (0..ensemble.len())
            .map(|i| {
                let (a, b) = (&l0[i], &l1[i]);
                ensemble.velocities[i]
                    + (a.drift + b.drift) * (0.5 * dt)
                    + (a.proj * a.amp + b.proj * b.amp) * db[i] * 0.5
            })
            .collect();
        let x = ensemble
            .positions
            .iter()
            .zip(ensemble.velocities.iter().zip(&v_pred))
            .map(|(x, (v, vp))| x + (v + vp) * (0.5 * c * dt))
            .collect();
        (x, v)
    };

    ensemble.positions = new_x;
    ensemble.velocities = new_v;
    for x in ensemble.positions.iter_mut() {
        ensemble.domain.wrap(x);
    }
    if opts.renormalize {
        for v in ensemble.velocities.iter_mut() {
            let n = v.norm();
            if n > 0.0 {
                *v /= n;
            }
        }
    }
    ensemble.t = t + dt;
    Ok(StepReport {
        flux_norms,
        min_flux_norm,
    })
}
