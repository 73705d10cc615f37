//! Finite-volume solver for the kinetic equation on (point or 1D torus) × S¹.
//!
//! Alignment corresponds to `ν < 0` in `∂ₜf + cω·∇ₓf = ∂_θ(σ∂_θf + ν f Ψ·e_θ)`.

mod checks;
mod energy;
mod linear;
mod nonlinear;
mod state;

pub use checks::{
    c2_of_field, coefficient_dependence_check, exponential_floor_applies, flux_floor_check, lp_growth_check,
    DependenceCheck, DependenceSample, FloorCheck, FloorTolerance, LpCheck,
};
pub use energy::{
    equilibrium_residual, equilibrium_truncation_estimate, free_energy_and_dissipation, EnergyReport, EnergySample,
    ENTROPY_FLOOR,
};
pub use linear::{explicit_dt_limit, step_linear, theta_gradient_l2_squared, LinearCoefficientField, ThetaMode};
pub use nonlinear::{assemble_field, solve_nonlinear, AlignmentField, FluxRecord, KineticConfig, KineticTrajectory};
pub use state::{KineticState, SpatialGrid};
