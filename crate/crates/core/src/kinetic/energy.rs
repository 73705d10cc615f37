//! Free energy, dissipation and the equilibrium residual on the FV grid.

use serde::Serialize;

use super::linear::{face_coefficients, face_fluxes, LinearCoefficientField};
use super::nonlinear::{assemble_field, AlignmentField};
use super::state::KineticState;
use crate::coefficients::CoefficientSet;
use crate::error::{Result, VicsekError};

/// Nodes below this value are left out of every `ln f` term.
pub const ENTROPY_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergySample {
    pub t: f64,
    pub entropy: f64,
    /// Trapezoidal `∫₀ᵗ G ds`, with `G = ∫ f [∂_θψ̄ − ψ̄²/σ̄]`.
    pub correction_integral: f64,
    pub free_energy: f64,
    pub dissipation: f64,
    /// `|ΔF/Δt + D̄|` over the interval ending at this sample; NaN at the first sample.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub samples: Vec<EnergySample>,
}

impl EnergyReport {
    /// True when `F` never increases by more than `slack` between samples.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.samples
            .windows(2)
            .all(|w| w[1].free_energy <= w[0].free_energy + slack)
    }

    /// `max |ΔF/Δt + D̄| / (1 + |D̄|)` over all intervals.
    pub fn max_relative_residual(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| {
                let d = 0.5 * (w[0].dissipation + w[1].dissipation);
                w[1].residual / (1.0 + d.abs())
            })
            .fold(0.0, f64::max)
    }
}

fn entropy(state: &KineticState) -> f64 {
    state
        .f
        .iter()
        .filter(|v| **v >= ENTROPY_FLOOR)
        .map(|v| v * v.ln())
        .sum::<f64>()
        * state.cell_volume()
}

/// `D = ∫ F_face² / (σ̄ f)`, with `F_face` the scheme's face flux; faces touching
/// a node below the entropy floor are skipped.
fn dissipation(state: &KineticState, field: &LinearCoefficientField) -> f64 {
    let h = state.grid.spacing();
    let nt = state.n_theta();
    let mut total = 0.0;
    for i in 0..state.n_x() {
        let r = i * nt..(i + 1) * nt;
        let f = state.slice(i);
        let (sigma, psi) = (&field.sigma[r.clone()], &field.psi[r]);
        let fluxes = face_fluxes(f, sigma, psi, h);
        for k in 0..nt {
            let (a, b) = (f[k], f[(k + 1) % nt]);
            if a < ENTROPY_FLOOR || b < ENTROPY_FLOOR {
                continue;
            }
            let (s, _) = face_coefficients(sigma, psi, k);
            total += fluxes[k] * fluxes[k] / (s * 0.5 * (a + b));
        }
    }
    total * state.cell_volume()
}

/// `G = ∫ f [∂_θψ̄ − ψ̄²/σ̄]`, with `∂_θψ̄` from face averages.
fn correction_rate(state: &KineticState, field: &LinearCoefficientField) -> f64 {
    let h = state.grid.spacing();
    let nt = state.n_theta();
    let mut total = 0.0;
    for i in 0..state.n_x() {
        let r = i * nt..(i + 1) * nt;
        let f = state.slice(i);
        let (sigma, psi) = (&field.sigma[r.clone()], &field.psi[r]);
        for k in 0..nt {
            let (_, up) = face_coefficients(sigma, psi, k);
            let (_, down) = face_coefficients(sigma, psi, (k + nt - 1) % nt);
            total += f[k] * ((up - down) / h - psi[k] * psi[k] / sigma[k]);
        }
    }
    total * state.cell_volume()
}

/// Free energy, dissipation and identity residual along a sequence of snapshots.
pub fn free_energy_and_dissipation(
    snapshots: &[KineticState],
    coeffs: &CoefficientSet,
    field: &AlignmentField,
) -> Result<EnergyReport> {
    if snapshots.len() < 2 {
        return Err(VicsekError::InvalidInput(
            "energy diagnostics need at least two snapshots".into(),
        ));
    }
    let mut samples: Vec<EnergySample> = Vec::with_capacity(snapshots.len());
    let mut prev_g = 0.0;
    for s in snapshots {
        let (lin, _) = assemble_field(s, coeffs, field)?;
        let ent = entropy(s);
        let d = dissipation(s, &lin);
        let g = correction_rate(s, &lin);
        let sample = match samples.last() {
            None => EnergySample {
                t: s.t,
                entropy: ent,
                correction_integral: 0.0,
                free_energy: ent,
                dissipation: d,
                residual: f64::NAN,
            },
            Some(p) => {
                let dt = s.t - p.t;
                let corr = p.correction_integral + 0.5 * (prev_g + g) * dt;
                let fe = ent + corr;
                EnergySample {
                    t: s.t,
                    entropy: ent,
                    correction_integral: corr,
                    free_energy: fe,
                    dissipation: d,
                    residual: ((fe - p.free_energy) / dt + 0.5 * (p.dissipation + d)).abs(),
                }
            }
        };
        prev_g = g;
        samples.push(sample);
    }
    Ok(EnergyReport { samples })
}

/// `sup |∂_θ ln f + ψ̄/σ̄|` over nodes, with centred differences.
pub fn equilibrium_residual(state: &KineticState, coeffs: &CoefficientSet, field: &AlignmentField) -> Result<f64> {
    let (lin, _) = assemble_field(state, coeffs, field)?;
    let h = state.grid.spacing();
    let nt = state.n_theta();
    let mut worst: f64 = 0.0;
    for i in 0..state.n_x() {
        let f = state.slice(i);
        for k in 0..nt {
            let (a, b) = (f[(k + nt - 1) % nt], f[(k + 1) % nt]);
            if a < ENTROPY_FLOOR || b < ENTROPY_FLOOR {
                continue;
            }
            let idx = i * nt + k;
            let r = (b.ln() - a.ln()) / (2.0 * h) + lin.psi[idx] / lin.sigma[idx];
            worst = worst.max(r.abs());
        }
    }
    Ok(worst)
}

/// Leading truncation error `Δθ²/6 · sup |∂³_θ ln f|` of the centred derivative.
pub fn equilibrium_truncation_estimate(state: &KineticState) -> f64 {
    let h = state.grid.spacing();
    let nt = state.n_theta();
    let mut worst: f64 = 0.0;
    for i in 0..state.n_x() {
        let f = state.slice(i);
        for k in 0..nt {
            let at = |o: isize| f[((k as isize + o).rem_euclid(nt as isize)) as usize];
            let vals = [at(-2), at(-1), at(1), at(2)];
            if vals.iter().any(|v| *v < ENTROPY_FLOOR) {
                continue;
            }
            let [m2, m1, p1, p2] = vals.map(f64::ln);
            let d3 = (p2 - 2.0 * p1 + 2.0 * m1 - m2) / (2.0 * h * h * h);
            worst = worst.max(d3.abs());
        }
    }
    h * h / 6.0 * worst
}
