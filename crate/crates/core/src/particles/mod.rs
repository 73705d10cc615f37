//! Interacting particle systems on Ω × S^{d−1}.

mod auxiliary;
mod ensemble;
mod noise;
mod sampling;
mod simulate;
mod step;

pub use auxiliary::{step_auxiliary, KineticPath};
pub use ensemble::{Domain, ParticleEnsemble, VELOCITY_NORM_TOL};
pub use noise::{replica_key, stream_rng, NoiseSource};
pub use sampling::{sample_initial, InitialSpec, OrientationLaw, SpatialLaw};
pub use simulate::{simulate, simulate_from, SimConfig, Snapshot, Trajectory};
pub use step::{step_particles, ItoCorrectionSign, MeanField, Scheme, StepOptions, StepReport, Variant};
