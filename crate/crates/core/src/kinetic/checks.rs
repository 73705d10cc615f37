//! A-posteriori checks of the linear and nonlinear estimates along computed solutions.

use serde::Serialize;

use super::linear::{face_coefficients, step_linear, theta_gradient_l2_squared, LinearCoefficientField, ThetaMode};
use super::nonlinear::FluxRecord;
use super::state::KineticState;
use crate::coefficients::{CoefficientSet, ConstantsReport, Friction, OrientationProfile, Viscosity};
use crate::error::{Result, VicsekError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpCheck {
    pub passed: bool,
    /// `min (1 − ‖f(t)‖_p / bound(t))` over snapshots; negative on failure.
    pub min_margin: f64,
    pub first_violation: Option<f64>,
}

/// `‖f(t)‖_p ≤ e^{C_p t}‖f₀‖_p (1 + tol)` at every snapshot; `p ∈ {report.p, ∞}`.
pub fn lp_growth_check(snapshots: &[KineticState], p: f64, report: &ConstantsReport, tol: f64) -> Result<LpCheck> {
    let c = if p.is_infinite() {
        report.c_inf
    } else if p == report.p {
        report.cp
    } else {
        return Err(VicsekError::InvalidInput(format!(
            "report was computed for p = {}, not p = {p}",
            report.p
        )));
    };
    let first = snapshots.first().ok_or(VicsekError::InvalidInput("no snapshots".into()))?;
    let (t0, n0) = (first.t, first.lp_norm(p));
    let mut min_margin = f64::INFINITY;
    let mut first_violation = None;
    for s in snapshots {
        let bound = (c * (s.t - t0)).exp() * n0;
        let norm = s.lp_norm(p);
        min_margin = min_margin.min(1.0 - norm / bound);
        if norm > bound * (1.0 + tol) && first_violation.is_none() {
            first_violation = Some(s.t);
        }
    }
    Ok(LpCheck {
        passed: first_violation.is_none(),
        min_margin,
        first_violation,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FloorCheck {
    pub passed: bool,
    /// Smallest `min|J|_α − (J₀ − K∞M₀t)` over records with `t < T₀`.
    pub linear_margin: f64,
    /// Whether the exponential Vicsek bound applied to this run.
    pub exponential_checked: bool,
    /// Smallest `|J(t)|² / (|J₀|² e^{−2σ₀t}) − 1` over checked records.
    pub exponential_margin: f64,
    pub first_violation: Option<f64>,
}

/// True for the classic Vicsek model on a homogeneous grid, where `|J|² e^{2σ₀t}` is non-decreasing.
pub fn exponential_floor_applies(coeffs: &CoefficientSet, state: &KineticState) -> bool {
    state.spatial.is_homogeneous()
        && coeffs.alpha == 0.0
        && matches!(coeffs.kernel.orientation, OrientationProfile::Alignment)
        && matches!(coeffs.friction, Friction::Constant { value } if value <= 0.0)
        && matches!(coeffs.viscosity, Viscosity::Constant { .. })
}

/// Tolerances of [`flux_floor_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FloorTolerance {
    /// Absolute slack on the linear floor.
    pub linear: f64,
    /// Relative slack on the exponential floor.
    pub exponential: f64,
    /// Last time at which the exponential floor is checked.
    pub exponential_horizon: f64,
}

impl Default for FloorTolerance {
    fn default() -> Self {
        Self {
            linear: 1e-3,
            exponential: 5e-3,
            exponential_horizon: f64::INFINITY,
        }
    }
}

pub fn flux_floor_check(
    records: &[FluxRecord],
    report: &ConstantsReport,
    exponential: bool,
    tol: &FloorTolerance,
) -> Result<FloorCheck> {
    let first = records.first().ok_or(VicsekError::InvalidInput("no flux records".into()))?;
    let t0 = first.t;
    let j_start = first.min_flux;
    let mut linear_margin = f64::INFINITY;
    let mut exponential_margin = f64::INFINITY;
    let mut first_violation: Option<f64> = None;
    let mut flag = |t: f64| {
        if first_violation.is_none() {
            first_violation = Some(t);
        }
    };
    for r in records {
        let t = r.t - t0;
        if t < report.t0 {
            let m = r.min_alpha_norm - report.c_star(t);
            linear_margin = linear_margin.min(m);
            if m < -tol.linear {
                flag(r.t);
            }
        }
        if exponential && t <= tol.exponential_horizon && j_start > 0.0 {
            let floor = j_start * j_start * (-2.0 * report.sigma0 * t).exp();
            let m = r.min_flux * r.min_flux / floor - 1.0;
            exponential_margin = exponential_margin.min(m);
            if m < -tol.exponential {
                flag(r.t);
            }
        }
    }
    Ok(FloorCheck {
        passed: first_violation.is_none(),
        linear_margin,
        exponential_checked: exponential,
        exponential_margin,
        first_violation,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DependenceSample {
    pub t: f64,
    pub left: f64,
    pub right: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DependenceCheck {
    pub passed: bool,
    /// `max left/right` over samples with a positive right side.
    pub ratio: f64,
    pub samples: Vec<DependenceSample>,
}

/// `C₂(σ̄, Ψ̄) = ‖∂_θψ̄‖_∞ + ‖ψ̄‖²_∞/σ̄₀` on the grid.
pub fn c2_of_field(state: &KineticState, field: &LinearCoefficientField) -> f64 {
    let h = state.grid.spacing();
    let nt = state.n_theta();
    let mut div: f64 = 0.0;
    for i in 0..state.n_x() {
        let r = i * nt..(i + 1) * nt;
        let (s, p) = (&field.sigma[r.clone()], &field.psi[r]);
        for k in 0..nt {
            let (_, up) = face_coefficients(s, p, k);
            let (_, down) = face_coefficients(s, p, (k + nt - 1) % nt);
            div = div.max(((up - down) / h).abs());
        }
    }
    let psi_sup = field.psi.iter().map(|v| v.abs()).fold(0.0, f64::max);
    div + psi_sup * psi_sup / field.sigma_min()
}

/// Runs the two linear solves from `f0` and checks the stability inequality
/// `‖f₁ − f₂‖² ≤ right side` (with `C₂` in sum form) at every step.
pub fn coefficient_dependence_check(
    f0: &KineticState,
    field_a: &LinearCoefficientField,
    field_b: &LinearCoefficientField,
    speed: f64,
    t_end: f64,
    dt: f64,
    tol: f64,
) -> Result<DependenceCheck> {
    field_a.check(f0)?;
    field_b.check(f0)?;
    let c2 = c2_of_field(f0, field_a) + c2_of_field(f0, field_b);
    let sigma_plus = field_a
        .sigma
        .iter()
        .zip(&field_b.sigma)
        .map(|(a, b)| a + b)
        .fold(f64::INFINITY, f64::min);
    let psi_diff = field_a
        .psi
        .iter()
        .zip(&field_b.psi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let sigma_diff = field_a
        .sigma
        .iter()
        .zip(&field_b.sigma)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let f0_l2 = f0.lp_norm(2.0).powi(2);

    let (mut f1, mut f2) = (f0.clone(), f0.clone());
    let n = (t_end / dt).round() as usize;
    // ∫₀ᵗ e^{−C₂s} g(s) ds by trapezoid, so that e^{C₂t}·acc is the weighted integral
    let grad = |a: &KineticState, b: &KineticState| theta_gradient_l2_squared(a) + theta_gradient_l2_squared(b);
    let mut g_prev = grad(&f1, &f2);
    let mut acc = 0.0;
    let mut samples = Vec::with_capacity(n);
    let mut ratio: f64 = 0.0;
    let mut passed = true;
    for k in 0..n {
        step_linear(&mut f1, field_a, speed, dt, ThetaMode::Implicit)?;
        step_linear(&mut f2, field_b, speed, dt, ThetaMode::Implicit)?;
        let t = (k + 1) as f64 * dt;
        let g = grad(&f1, &f2);
        acc += 0.5 * dt * ((-c2 * (t - dt)).exp() * g_prev + (-c2 * t).exp() * g);
        g_prev = g;
        let left = f1
            .f
            .iter()
            .zip(&f2.f)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            * f0.cell_volume();
        let right = 4.0 * (3.0 * c2 * t).exp() * f0_l2 / sigma_plus * t * psi_diff * psi_diff
            + 2.0 / sigma_plus * (c2 * t).exp() * acc * sigma_diff * sigma_diff;
        if right > 0.0 {
            ratio = ratio.max(left / right);
        }
        if left > right * (1.0 + tol) + 1e-14 {
            passed = false;
        }
        samples.push(DependenceSample { t, left, right });
    }
    Ok(DependenceCheck {
        passed,
        ratio,
        samples,
    })
}
