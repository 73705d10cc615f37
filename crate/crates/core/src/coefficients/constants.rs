//! Explicit constants of the local well-posedness theory: drift bounds,
//! flux decay rate, existence horizons and the flux floor.

use serde::Serialize;

use super::{CoefficientSet, FluxField, SpatialMeasure};
use crate::error::{Result, VicsekError};
use crate::kinetic::{KineticState, SpatialGrid};

/// Constants computed from an initial density and a coefficient set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsReport {
    /// Exponent `p` used for `C_p`.
    pub p: f64,
    pub m0: f64,
    /// `inf |J[f₀]|_α` over the grid.
    pub j0: f64,
    pub sigma0: f64,
    pub sigma_inf: f64,
    pub sigma_lip: f64,
    pub nu_inf: f64,
    pub nu_lip: f64,
    pub c_alpha: f64,
    pub c1m: f64,
    pub c2m: f64,
    pub k_inf: f64,
    pub cp: f64,
    pub c_inf: f64,
    /// `C₂` entering `Λ`, in sum form.
    pub c2_sum: f64,
    pub psi_lip: f64,
    pub f0_l2_squared: f64,
    pub t0: f64,
    pub t1: f64,
    pub notes: Vec<String>,
}

impl ConstantsReport {
    /// `Λ(T) = 2‖f₀‖²/σ₀² · T · e^{3C₂T} · (Ψ_lip σ₀ + 2σ_lip)`.
    pub fn lambda(&self, t: f64) -> f64 {
        2.0 * self.f0_l2_squared / (self.sigma0 * self.sigma0)
            * t
            * (3.0 * self.c2_sum * t).exp()
            * (self.psi_lip * self.sigma0 + 2.0 * self.sigma_lip)
    }

    /// `c*(T) = J₀ − K∞ M₀ T`.
    pub fn c_star(&self, t: f64) -> f64 {
        self.j0 - self.k_inf * self.m0 * t
    }

    /// `|J(0)| − K∞ M₀ t`, the linear floor of the flux along the kinetic flow.
    pub fn linear_floor(&self, j_initial: f64, t: f64) -> f64 {
        j_initial - self.k_inf * self.m0 * t
    }
}

fn bisect_t1(report: &ConstantsReport) -> f64 {
    let target = 0.25;
    if report.lambda(report.t0) <= target {
        return report.t0;
    }
    let (mut lo, mut hi) = (0.0, report.t0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if report.lambda(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Computes the constants for the initial density `f0` (d = 2 orientation grid).
pub fn constants_report(f0: &KineticState, coeffs: &CoefficientSet, p: f64) -> Result<ConstantsReport> {
    coeffs.validate(2)?;
    if !(p >= 2.0) {
        return Err(VicsekError::InvalidInput(format!("p must be in [2, ∞], got {p}")));
    }
    let m0 = f0.mass();
    if !(m0 > 0.0) {
        return Err(VicsekError::InvalidInput(format!("initial mass must be positive, got {m0}")));
    }
    let measure = match f0.spatial {
        SpatialGrid::Homogeneous => SpatialMeasure::Homogeneous,
        SpatialGrid::Torus1D { length, .. } => SpatialMeasure::Torus1D { length },
    };
    let bounds = coeffs.bounds(2, m0, measure);
    let alpha = coeffs.alpha;
    let j0 = FluxField::compute(f0, coeffs).min_alpha_norm();
    if alpha == 0.0 && !(j0 >= super::SINGULAR_FLUX_TOL) {
        return Err(VicsekError::DegenerateInitialFlux(j0));
    }

    let nu_inf = bounds.nu_inf;
    let c1m = if alpha == 1.0 {
        nu_inf * bounds.kernel_sup * m0
    } else {
        nu_inf / (1.0 - alpha)
    };
    let c_alpha = if alpha == 1.0 {
        1.0
    } else {
        2.0 / (alpha + (1.0 - alpha) * j0 / 2.0)
    };
    let c2m = c1m + nu_inf * c_alpha * m0 * bounds.kernel_w1_omega;
    let kernel_norm = bounds
        .kernel_coordinate_norms
        .iter()
        .map(|k| k * k)
        .sum::<f64>()
        .sqrt();
    let k_inf = (1.0 + coeffs.speed.abs() + bounds.sigma_inf + bounds.sigma_lip + c1m) * kernel_norm;
    let sigma0 = bounds.sigma0;
    let cp = if p.is_infinite() {
        c2m
    } else {
        c2m + c1m * c1m / ((p - 1.0) * sigma0)
    };
    let c2 = c2m + c1m * c1m / sigma0;
    let psi_lip = (bounds.nu_lip * c1m + nu_inf * c_alpha * bounds.kernel_l2).powi(2);
    let t0 = j0 / (2.0 * k_inf * m0);

    let mut report = ConstantsReport {
        p,
        m0,
        j0,
        sigma0,
        sigma_inf: bounds.sigma_inf,
        sigma_lip: bounds.sigma_lip,
        nu_inf,
        nu_lip: bounds.nu_lip,
        c_alpha,
        c1m,
        c2m,
        k_inf,
        cp,
        c_inf: c2m,
        c2_sum: 2.0 * c2,
        psi_lip,
        f0_l2_squared: f0.lp_norm(2.0).powi(2),
        t0,
        t1: 0.0,
        notes: vec![
            "Psi_lip uses C1M in place of the undefined constant Psi_0".into(),
            format!("C_alpha = {c_alpha} (1 if alpha = 1, else 2/(alpha + (1-alpha) J0/2))"),
            "C2 in Lambda is the sum C2(s1,P1) + C2(s2,P2) at worst-case bounds".into(),
        ],
    };
    report.t1 = bisect_t1(&report);
    Ok(report)
}
