//! Coupling experiments between the particle system and the kinetic equation.
//!
//! The particle system and its auxiliary twins share initial draws and
//! Brownian increments; the twins feel the kinetic solution `f_t` instead of
//! their own empirical measure. Path-space distances are replaced by their
//! values at the sampled snapshot times.

mod coupling;
mod sweep;
mod wasserstein;

pub use coupling::{coupled_run, kinetic_initial, CouplingConfig, CouplingReplica, KineticReference};
pub use sweep::{
    chaos_sweep, flux_probability_estimate, median, quantile, FluxProbability, SweepAggregate, SweepReport, SweepRow,
};
pub use wasserstein::{
    hungarian, matched_pair_bound, w2_empirical_to_density, wasserstein1_empirical, wasserstein2_empirical,
    WassersteinEstimate, EXACT_ASSIGNMENT_MAX,
};
