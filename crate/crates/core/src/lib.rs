//! Simulation and verification toolkit for general Vicsek alignment dynamics.
//!
//! The crate covers four layers that share one set of model coefficients:
//!
//! * [`geometry`]: tangential calculus on the sphere and the periodic
//!   orientation grid used by the two-dimensional kinetic solver.
//! * [`coefficients`]: interaction kernels, friction and viscosity laws, the
//!   normalised alignment field, its Lipschitz regularisations and the explicit
//!   well-posedness constants (existence horizons, flux floors).
//! * [`particles`]: the interacting particle system on the sphere in
//!   Stratonovich (Heun) and Itô (projected Euler) form, plus the auxiliary
//!   process driven by a kinetic density.
//! * [`kinetic`]: a conservative finite-volume solver for the kinetic
//!   Fokker-Planck equation on (point or 1D torus) × S¹ with free-energy,
//!   flux-floor and Lᵖ diagnostics.
//! * [`meanfield`]: coupling experiments, Wasserstein estimators and
//!   propagation-of-chaos sweeps.
//!
//! Sign convention: the kinetic equation is
//! `∂ₜf + c ω·∇ₓf = ∇_ω·(σ ∇_ω f) + ∇_ω·(ν f P_{ω⊥} Ψ)`, so alignment
//! corresponds to a negative friction `ν < 0`. The particle velocity drift is
//! `−ν P_{V⊥} τ`, which is the drift whose Fokker-Planck equation is the
//! kinetic equation above.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coefficients;
pub mod error;
pub mod geometry;
pub mod kinetic;
pub mod meanfield;
pub mod particles;
pub mod presets;

pub use error::{Result, VicsekError};

/// Fixed-size real vector in ℝᴰ.
pub type Vector<const D: usize> = nalgebra::SVector<f64, D>;
/// Fixed-size real matrix in ℝᴰˣᴰ.
pub type Matrix<const D: usize> = nalgebra::SMatrix<f64, D, D>;
