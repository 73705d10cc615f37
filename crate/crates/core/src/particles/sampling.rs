//! I.i.d. initial conditions drawn from catalogued densities.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::noise::{stream_rng, SAMPLING_STREAM};
use super::{Domain, ParticleEnsemble};
use crate::error::{Result, VicsekError};
use crate::Vector;

/// Orientation marginal, with mean direction `e₁` where relevant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OrientationLaw {
    Uniform,
    /// Density proportional to `exp(κ ω·e₁)`.
    VonMises { kappa: f64 },
    /// Density proportional to `exp(κ cos θ)(1 + ε sin 2θ)` on S¹ (d = 2 only).
    PerturbedVonMises { kappa: f64, epsilon: f64 },
}

/// Spatial marginal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpatialLaw {
    /// Every particle at the origin (homogeneous experiments).
    Point,
    /// Uniform on the torus.
    Uniform,
    /// Density proportional to `1 + a cos(2π x₁/L₁)` on the torus.
    Cosine { amplitude: f64 },
    /// Isotropic Gaussian around the box centre (or the origin in free space).
    Gaussian { std: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub orientation: OrientationLaw,
    pub spatial: SpatialLaw,
}

fn uniform_sphere<const D: usize>(rng: &mut ChaCha8Rng) -> Vector<D> {
    loop {
        let g = Vector::<D>::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
        let n = g.norm();
        if n > 1e-12 {
            return g / n;
        }
    }
}

/// Von Mises-Fisher draw with mean `e₁` (Wood's rejection algorithm).
fn von_mises_fisher<const D: usize>(rng: &mut ChaCha8Rng, kappa: f64) -> Result<Vector<D>> {
    if kappa == 0.0 {
        return Ok(uniform_sphere(rng));
    }
    let p1 = D as f64 - 1.0;
    // b = (−2κ + √(4κ² + (p−1)²))/(p−1), written without cancellation
    let b = p1 / (2.0 * kappa + (4.0 * kappa * kappa + p1 * p1).sqrt());
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + p1 * (1.0 - x0 * x0).ln();
    let beta = Beta::new(p1 / 2.0, p1 / 2.0)
        .map_err(|e| VicsekError::InvalidInput(format!("beta law: {e}")))?;
    let w = loop {
        let z: f64 = beta.sample(rng);
        let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        let u: f64 = rng.random();
        if kappa * w + p1 * (1.0 - x0 * w).ln() - c >= u.ln() {
            break w;
        }
    };
    let r = (1.0 - w * w).max(0.0).sqrt();
    let mut v = Vector::<D>::zeros();
    v[0] = w;
    if D == 2 {
        v[1] = if rng.random::<bool>() { r } else { -r };
    } else {
        let mut xi = Vector::<D>::zeros();
        loop {
            for k in 1..D {
                xi[k] = rng.sample::<f64, _>(StandardNormal);
            }
            if xi.norm() > 1e-12 {
                break;
            }
        }
        v += xi * (r / xi.norm());
    }
    Ok(v / v.norm())
}

fn sample_orientation<const D: usize>(rng: &mut ChaCha8Rng, law: OrientationLaw) -> Result<Vector<D>> {
    match law {
        OrientationLaw::Uniform => Ok(uniform_sphere(rng)),
        OrientationLaw::VonMises { kappa } => von_mises_fisher(rng, kappa),
        OrientationLaw::PerturbedVonMises { kappa, epsilon } => {
            if D != 2 {
                return Err(VicsekError::Unsupported(
                    "perturbed von Mises orientations are defined on S¹ only".into(),
                ));
            }
            loop {
                let v: Vector<D> = von_mises_fisher(rng, kappa)?;
                let t = v[1].atan2(v[0]);
                let u: f64 = rng.random();
                if u * (1.0 + epsilon.abs()) <= 1.0 + epsilon * (2.0 * t).sin() {
                    return Ok(v);
                }
            }
        }
    }
}

fn sample_position<const D: usize>(rng: &mut ChaCha8Rng, law: SpatialLaw, domain: &Domain) -> Result<Vector<D>> {
    let lengths = match domain {
        Domain::Torus { lengths } => Some(lengths),
        Domain::Free => None,
    };
    let need_torus = || {
        VicsekError::Unsupported("uniform and cosine positions need a torus domain".into())
    };
    match law {
        SpatialLaw::Point => Ok(Vector::zeros()),
        SpatialLaw::Uniform => {
            let l = lengths.ok_or_else(need_torus)?;
            Ok(Vector::from_fn(|i, _| rng.random::<f64>() * l[i]))
        }
        SpatialLaw::Cosine { amplitude } => {
            let l = lengths.ok_or_else(need_torus)?;
            loop {
                let x: Vector<D> = Vector::from_fn(|i, _| rng.random::<f64>() * l[i]);
                let u: f64 = rng.random();
                let dens = 1.0 + amplitude * (std::f64::consts::TAU * x[0] / l[0]).cos();
                if u * (1.0 + amplitude.abs()) <= dens {
                    return Ok(x);
                }
            }
        }
        SpatialLaw::Gaussian { std } => {
            let centre = Vector::<D>::from_fn(|i, _| lengths.map_or(0.0, |l| 0.5 * l[i]));
            let g = Vector::<D>::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
            let mut x = centre + g * std;
            domain.wrap(&mut x);
            Ok(x)
        }
    }
}

impl InitialSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(VicsekError::InvalidInput(m.into()));
        match self.orientation {
            OrientationLaw::VonMises { kappa } | OrientationLaw::PerturbedVonMises { kappa, .. }
                if !(kappa.is_finite() && kappa >= 0.0) =>
            {
                return bad("von Mises concentration must be finite and nonnegative")
            }
            OrientationLaw::PerturbedVonMises { epsilon, .. } if !(epsilon.abs() < 1.0) => {
                return bad("perturbation amplitude must satisfy |epsilon| < 1")
            }
            _ => {}
        }
        match self.spatial {
            SpatialLaw::Cosine { amplitude } if !(amplitude.abs() <= 1.0) => {
                bad("cosine amplitude must satisfy |amplitude| <= 1")
            }
            SpatialLaw::Gaussian { std } if !(std.is_finite() && std >= 0.0) => {
                bad("gaussian std must be nonnegative")
            }
            _ => Ok(()),
        }
    }
}

/// Draws `n` i.i.d. particles; deterministic in `(seed, replica)`.
pub fn sample_initial<const D: usize>(
    spec: &InitialSpec,
    domain: &Domain,
    n: usize,
    seed: u64,
    replica: u64,
) -> Result<ParticleEnsemble<D>> {
    spec.validate()?;
    domain.validate(D)?;
    if n == 0 {
        return Err(VicsekError::EmptyEnsemble);
    }
    let mut rng = stream_rng(seed, replica, SAMPLING_STREAM);
    let mut xs = Vec::with_capacity(n);
    let mut vs = Vec::with_capacity(n);
    for _ in 0..n {
        xs.push(sample_position::<D>(&mut rng, spec.spatial, domain)?);
        vs.push(sample_orientation::<D>(&mut rng, spec.orientation)?);
    }
    ParticleEnsemble::new(xs, vs, domain.clone())
}
