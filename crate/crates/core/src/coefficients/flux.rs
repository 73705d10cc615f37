//! Flux `J = ∫ K f` for kinetic densities and empirical measures.

use rayon::prelude::*;

use super::kernel::{Kernel, Moments};
use super::{alpha_norm, CoefficientSet};
use crate::error::{Result, VicsekError};
use crate::kinetic::KineticState;
use crate::particles::ParticleEnsemble;
use crate::Vector;

/// Anything that can produce `J(x, v)` for a given kernel. Catalogued kernels
/// make `J` affine in `v`, so sources expose the moments `(A(x), B(x))` with
/// `J(x, v) = A(x) + B(x) v`.
pub trait FluxSource<const D: usize>: Sync {
    fn moments_at(&self, kernel: &Kernel, x: &Vector<D>) -> Moments<D>;

    fn flux_at(&self, kernel: &Kernel, x: &Vector<D>, v: &Vector<D>) -> Vector<D> {
        self.moments_at(kernel, x).flux(v)
    }

    /// Moments at many positions; implementations may share work across queries.
    fn moments_batch(&self, kernel: &Kernel, xs: &[Vector<D>]) -> Vec<Moments<D>> {
        xs.par_iter().map(|x| self.moments_at(kernel, x)).collect()
    }
}

/// `(1/N) Σ_j K(x − X^j, v, V^j)`.
pub fn flux_empirical<const D: usize>(
    ensemble: &ParticleEnsemble<D>,
    coeffs: &CoefficientSet,
    x: &Vector<D>,
    v: &Vector<D>,
) -> Result<Vector<D>> {
    if ensemble.is_empty() {
        return Err(VicsekError::EmptyEnsemble);
    }
    Ok(ensemble.flux_at(&coeffs.kernel, x, v))
}

fn empirical_moments<const D: usize>(e: &ParticleEnsemble<D>, kernel: &Kernel) -> Moments<D> {
    let mut m = Moments::zero();
    for v in &e.velocities {
        m.add_scaled(&kernel.orientation.moments(v), 1.0);
    }
    m.scaled(1.0 / e.len() as f64)
}

impl<const D: usize> FluxSource<D> for ParticleEnsemble<D> {
    fn moments_at(&self, kernel: &Kernel, x: &Vector<D>) -> Moments<D> {
        if kernel.spatial.is_uniform() {
            return empirical_moments(self, kernel);
        }
        let mut m = Moments::zero();
        for (xj, vj) in self.positions.iter().zip(&self.velocities) {
            let b = kernel.spatial.eval(&self.domain.displacement(x, xj));
            if b != 0.0 {
                m.add_scaled(&kernel.orientation.moments(vj), b);
            }
        }
        m.scaled(1.0 / self.len() as f64)
    }

    fn moments_batch(&self, kernel: &Kernel, xs: &[Vector<D>]) -> Vec<Moments<D>> {
        if kernel.spatial.is_uniform() {
            return vec![empirical_moments(self, kernel); xs.len()];
        }
        xs.par_iter().map(|x| self.moments_at(kernel, x)).collect()
    }
}

/// Per-slice orientation moments of a kinetic density, `m_j = Σ_k (a, B)(ω_k) f_{jk} Δx Δθ`.
#[derive(Debug, Clone)]
pub struct KineticMoments {
    slices: Vec<Moments<2>>,
    total: Moments<2>,
    xs: Vec<f64>,
    length: Option<f64>,
}

impl KineticMoments {
    pub fn new(state: &KineticState, kernel: &Kernel) -> Self {
        let w = state.cell_volume();
        let per_node: Vec<Moments<2>> = (0..state.n_theta())
            .map(|k| kernel.orientation.moments(&state.grid.omega(k)))
            .collect();
        let slices: Vec<Moments<2>> = (0..state.n_x())
            .map(|i| {
                let mut m = Moments::zero();
                for (mk, fk) in per_node.iter().zip(state.slice(i)) {
                    m.add_scaled(mk, *fk * w);
                }
                m
            })
            .collect();
        let mut total = Moments::zero();
        for m in &slices {
            total.add_scaled(m, 1.0);
        }
        Self {
            slices,
            total,
            xs: (0..state.n_x()).map(|i| state.spatial.x(i)).collect(),
            length: state.spatial.length(),
        }
    }

    /// `(1 − w) a + w b`, the moments of the linearly interpolated density.
    pub fn lerp(a: &Self, b: &Self, w: f64) -> Self {
        let mix = |p: &Moments<2>, q: &Moments<2>| {
            let mut m = p.scaled(1.0 - w);
            m.add_scaled(q, w);
            m
        };
        Self {
            slices: a.slices.iter().zip(&b.slices).map(|(p, q)| mix(p, q)).collect(),
            total: mix(&a.total, &b.total),
            xs: a.xs.clone(),
            length: a.length,
        }
    }

    /// Moments seen from position `x` (ignored on homogeneous grids).
    pub fn at(&self, kernel: &Kernel, x: f64) -> Moments<2> {
        let Some(length) = self.length else {
            return self.total;
        };
        if kernel.spatial.is_uniform() {
            return self.total;
        }
        let mut m = Moments::zero();
        for (xj, mj) in self.xs.iter().zip(&self.slices) {
            let mut d = x - xj;
            d -= length * (d / length).round();
            let b = kernel.spatial.eval_1d(d);
            if b != 0.0 {
                m.add_scaled(mj, b);
            }
        }
        m
    }
}

impl FluxSource<2> for KineticMoments {
    fn moments_at(&self, kernel: &Kernel, x: &Vector<2>) -> Moments<2> {
        self.at(kernel, x[0])
    }

    fn moments_batch(&self, kernel: &Kernel, xs: &[Vector<2>]) -> Vec<Moments<2>> {
        if self.length.is_none() || kernel.spatial.is_uniform() {
            return vec![self.total; xs.len()];
        }
        xs.par_iter().map(|x| self.at(kernel, x[0])).collect()
    }
}

impl FluxSource<2> for KineticState {
    fn moments_at(&self, kernel: &Kernel, x: &Vector<2>) -> Moments<2> {
        KineticMoments::new(self, kernel).at(kernel, x[0])
    }

    fn moments_batch(&self, kernel: &Kernel, xs: &[Vector<2>]) -> Vec<Moments<2>> {
        KineticMoments::new(self, kernel).moments_batch(kernel, xs)
    }
}

/// Quadrature of `∫ K(x, x*, ω, ω*) f(x*, ω*) dx* dω*` at the query `(x, ω)`.
pub fn flux_kinetic(state: &KineticState, coeffs: &CoefficientSet, x: f64, omega: &Vector<2>) -> Vector<2> {
    KineticMoments::new(state, &coeffs.kernel)
        .at(&coeffs.kernel, x)
        .flux(omega)
}

/// Flux and `|J|_α` at every node of a kinetic grid, row-major like the density.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxField {
    pub j: Vec<Vector<2>>,
    pub alpha_norm: Vec<f64>,
}

impl FluxField {
    pub fn compute(state: &KineticState, coeffs: &CoefficientSet) -> Self {
        let moments = KineticMoments::new(state, &coeffs.kernel);
        let nt = state.n_theta();
        let mut j = Vec::with_capacity(state.f.len());
        for i in 0..state.n_x() {
            let m = moments.at(&coeffs.kernel, state.spatial.x(i));
            j.extend((0..nt).map(|k| m.flux(&state.grid.omega(k))));
        }
        let alpha_norm = j.iter().map(|v| alpha_norm(v, coeffs.alpha)).collect();
        Self { j, alpha_norm }
    }

    pub fn min_norm(&self) -> f64 {
        self.j.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn min_alpha_norm(&self) -> f64 {
        self.alpha_norm.iter().copied().fold(f64::INFINITY, f64::min)
    }
}
