use serde::{Deserialize, Serialize};

use crate::error::{Result, VicsekError};
use crate::Vector;

/// Spatial domain Ω of the particles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Domain {
    /// Whole space ℝᵈ.
    Free,
    /// Periodic box `∏ [0, L_i)`.
    Torus { lengths: Vec<f64> },
}

impl Domain {
    pub fn torus(length: f64, dim: usize) -> Self {
        Self::Torus {
            lengths: vec![length; dim],
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if let Self::Torus { lengths } = self {
            if lengths.len() != dim {
                return Err(VicsekError::LengthMismatch {
                    expected: dim,
                    got: lengths.len(),
                });
            }
            if lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
                return Err(VicsekError::InvalidInput(
                    "torus lengths must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    /// Wraps a position into `[0, L)` componentwise.
    #[inline]
    pub fn wrap<const D: usize>(&self, x: &mut Vector<D>) {
        if let Self::Torus { lengths } = self {
            for (xi, l) in x.iter_mut().zip(lengths) {
                *xi = xi.rem_euclid(*l);
                // rem_euclid can round up to exactly L for tiny negative inputs
                if *xi >= *l {
                    *xi = 0.0;
                }
            }
        }
    }

    /// Minimal-image displacement `x − y`.
    #[inline]
    pub fn displacement<const D: usize>(&self, x: &Vector<D>, y: &Vector<D>) -> Vector<D> {
        let mut d = x - y;
        if let Self::Torus { lengths } = self {
            for (di, l) in d.iter_mut().zip(lengths) {
                *di -= l * (*di / l).round();
            }
        }
        d
    }

    pub fn volume(&self) -> Option<f64> {
        match self {
            Self::Free => None,
            Self::Torus { lengths } => Some(lengths.iter().product()),
        }
    }
}

/// N particles with positions in Ω and unit velocities on S^{D−1}.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble<const D: usize> {
    pub positions: Vec<Vector<D>>,
    pub velocities: Vec<Vector<D>>,
    pub t: f64,
    /// Noise stream of each particle; travels with the particle under permutation.
    pub stream_ids: Vec<u64>,
    pub domain: Domain,
}

/// Tolerance on `| |V| − 1 |` accepted at construction.
pub const VELOCITY_NORM_TOL: f64 = 1e-10;

impl<const D: usize> ParticleEnsemble<D> {
    pub fn new(
        mut positions: Vec<Vector<D>>,
        velocities: Vec<Vector<D>>,
        domain: Domain,
    ) -> Result<Self> {
        if positions.is_empty() {
            return Err(VicsekError::EmptyEnsemble);
        }
        if positions.len() != velocities.len() {
            return Err(VicsekError::LengthMismatch {
                expected: positions.len(),
                got: velocities.len(),
            });
        }
        domain.validate(D)?;
        if let Some(v) = velocities
            .iter()
            .find(|v| (v.norm() - 1.0).abs() > VELOCITY_NORM_TOL)
        {
            return Err(VicsekError::InvalidInput(format!(
                "velocity of norm {} is not on the sphere",
                v.norm()
            )));
        }
        for x in positions.iter_mut() {
            domain.wrap(x);
        }
        let n = positions.len() as u64;
        Ok(Self {
            positions,
            velocities,
            t: 0.0,
            stream_ids: (0..n).collect(),
            domain,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn mean_velocity(&self) -> Vector<D> {
        self.velocities.iter().sum::<Vector<D>>() / self.len() as f64
    }

    /// `max_i | |V^i| − 1 |`.
    pub fn max_norm_defect(&self) -> f64 {
        self.velocities
            .iter()
            .map(|v| (v.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Reorders particles (with their streams) so that new index `k` holds old `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.len() {
            return Err(VicsekError::LengthMismatch {
                expected: self.len(),
                got: perm.len(),
            });
        }
        Ok(Self {
            positions: perm.iter().map(|&k| self.positions[k]).collect(),
            velocities: perm.iter().map(|&k| self.velocities[k]).collect(),
            t: self.t,
            stream_ids: perm.iter().map(|&k| self.stream_ids[k]).collect(),
            domain: self.domain.clone(),
        })
    }
}
