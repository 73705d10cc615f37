//! Auxiliary process: particles whose coefficients are computed from a
//! prescribed kinetic density `f_t` instead of their empirical measure.

use super::step::{step_particles, MeanField, StepOptions, StepReport};
use super::{NoiseSource, ParticleEnsemble};
use crate::coefficients::{CoefficientSet, KineticMoments, RegularizationSpec};
use crate::error::{Result, VicsekError};
use crate::kinetic::KineticState;

/// Time series of kinetic snapshots, linearly interpolated in time.
#[derive(Debug, Clone)]
pub struct KineticPath {
    times: Vec<f64>,
    moments: Vec<KineticMoments>,
}

impl KineticPath {
    /// Snapshots must be sorted by time and share one grid.
    pub fn new(snapshots: &[KineticState], coeffs: &CoefficientSet) -> Result<Self> {
        let first = snapshots
            .first()
            .ok_or_else(|| VicsekError::InvalidInput("kinetic path needs at least one snapshot".into()))?;
        for s in snapshots {
            first.same_grid(s)?;
        }
        if snapshots.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(VicsekError::InvalidInput(
                "kinetic snapshots must have strictly increasing times".into(),
            ));
        }
        Ok(Self {
            times: snapshots.iter().map(|s| s.t).collect(),
            moments: snapshots
                .iter()
                .map(|s| KineticMoments::new(s, &coeffs.kernel))
                .collect(),
        })
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap_or(&self.times[0])
    }

    /// Moments of `f_t`; times outside the covered range are an error up to a
    /// relative round-off slack.
    pub fn at(&self, t: f64) -> Result<KineticMoments> {
        let (start, end) = (self.start(), self.end());
        let slack = 1e-9 * (1.0 + start.abs().max(end.abs()));
        if !(t >= start - slack && t <= end + slack) {
            return Err(VicsekError::MissingSnapshot { t, start, end });
        }
        let t = t.clamp(start, end);
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return Ok(self.moments[0].clone());
        }
        if k == self.times.len() {
            return Ok(self.moments[k - 1].clone());
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        Ok(KineticMoments::lerp(&self.moments[k - 1], &self.moments[k], w))
    }
}

/// One step of the auxiliary process on `[t, t + dt]`, with `t = ensemble.t`.
#[allow(clippy::too_many_arguments)]
pub fn step_auxiliary(
    ensemble: &mut ParticleEnsemble<2>,
    path: &KineticPath,
    coeffs: &CoefficientSet,
    reg: &RegularizationSpec,
    opts: &StepOptions,
    noise: &NoiseSource,
    step_index: u64,
    dt: f64,
) -> Result<StepReport> {
    let now = path.at(ensemble.t)?;
    let next = path.at(ensemble.t + dt)?;
    step_particles(
        ensemble,
        MeanField::External {
            now: &now,
            next: &next,
        },
        coeffs,
        reg,
        opts,
        noise,
        step_index,
        dt,
    )
}
