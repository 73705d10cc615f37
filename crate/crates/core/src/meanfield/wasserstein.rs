//! Wasserstein distances between uniform empirical measures and from an
//! empirical measure on S¹ to a kinetic density.

use serde::Serialize;

use crate::error::{Result, VicsekError};
use crate::kinetic::KineticState;
use crate::Vector;

/// Largest `N` solved by exact assignment; above it only the matched-pair bound is reported.
pub const EXACT_ASSIGNMENT_MAX: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WassersteinEstimate {
    pub value: f64,
    /// False when `value` is the index-matched upper bound rather than the optimum.
    pub exact: bool,
}

/// Minimum-cost perfect matching of a square cost matrix (row-major), by the
/// shortest augmenting path method with potentials. Returns `assignment[row] = col`.
pub fn hungarian(cost: &[f64], n: usize) -> Vec<usize> {
    assert_eq!(cost.len(), n * n);
    let inf = f64::INFINITY;
    // 1-based arrays; column 0 is the virtual source
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_sets<P: AsRef<[f64]>>(a: &[P], b: &[P]) -> Result<()> {
    if a.len() != b.len() {
        return Err(VicsekError::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.is_empty() {
        return Err(VicsekError::EmptyEnsemble);
    }
    let d = a[0].as_ref().len();
    if let Some(p) = a.iter().chain(b).find(|p| p.as_ref().len() != d) {
        return Err(VicsekError::LengthMismatch {
            expected: d,
            got: p.as_ref().len(),
        });
    }
    Ok(())
}

/// `sqrt((1/N) Σ |aᵢ − bᵢ|²)`, the cost of the identity matching.
pub fn matched_pair_bound<P: AsRef<[f64]>>(a: &[P], b: &[P]) -> Result<f64> {
    check_sets(a, b)?;
    let s: f64 = a.iter().zip(b).map(|(x, y)| squared_distance(x.as_ref(), y.as_ref())).sum();
    Ok((s / a.len() as f64).sqrt())
}

fn wasserstein_p<P: AsRef<[f64]>>(a: &[P], b: &[P], p: i32) -> Result<WassersteinEstimate> {
    check_sets(a, b)?;
    let n = a.len();
    if n > EXACT_ASSIGNMENT_MAX {
        let s: f64 = a
            .iter()
            .zip(b)
            .map(|(x, y)| squared_distance(x.as_ref(), y.as_ref()).sqrt().powi(p))
            .sum();
        return Ok(WassersteinEstimate {
            value: (s / n as f64).powf(1.0 / p as f64),
            exact: false,
        });
    }
    let mut cost = Vec::with_capacity(n * n);
    for x in a {
        for y in b {
            let d2 = squared_distance(x.as_ref(), y.as_ref());
            cost.push(if p == 2 { d2 } else { d2.sqrt().powi(p) });
        }
    }
    let assignment = hungarian(&cost, n);
    let total: f64 = assignment.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
    Ok(WassersteinEstimate {
        value: (total.max(0.0) / n as f64).powf(1.0 / p as f64),
        exact: true,
    })
}

/// `W₂` between the uniform empirical measures on `a` and `b` (Euclidean ground metric).
pub fn wasserstein2_empirical<P: AsRef<[f64]>>(a: &[P], b: &[P]) -> Result<WassersteinEstimate> {
    wasserstein_p(a, b, 2)
}

/// `W₁` with the same assignment machinery and linear cost.
pub fn wasserstein1_empirical<P: AsRef<[f64]>>(a: &[P], b: &[P]) -> Result<WassersteinEstimate> {
    wasserstein_p(a, b, 1)
}

/// Number of quantile levels used by [`w2_empirical_to_density`].
const QUANTILE_LEVELS: usize = 8192;

/// `W₂` on S¹ between the empirical measure of `points` and a homogeneous
/// density, by the circular quantile coupling with the best cut point. The
/// cost is the arc length, which bounds the chordal distance `2 sin(s/2)` from
/// above and is within a factor `π/2` of it.
pub fn w2_empirical_to_density(points: &[Vector<2>], f: &KineticState) -> Result<f64> {
    if !f.spatial.is_homogeneous() {
        return Err(VicsekError::Unsupported(
            "density comparison needs a spatially homogeneous state".into(),
        ));
    }
    if points.is_empty() {
        return Err(VicsekError::EmptyEnsemble);
    }
    let tau = std::f64::consts::TAU;
    let mut angles: Vec<f64> = points.iter().map(|p| p[1].atan2(p[0]).rem_euclid(tau)).collect();
    angles.sort_by(f64::total_cmp);
    let n = angles.len();

    // density CDF, piecewise linear over cells [θ_k − h/2, θ_k + h/2]
    let h = f.grid.spacing();
    let w: Vec<f64> = f.f.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(VicsekError::InvalidInput("density has no mass".into()));
    }
    let mut cdf = Vec::with_capacity(w.len() + 1);
    cdf.push(0.0);
    for v in &w {
        cdf.push(cdf.last().unwrap() + v / total);
    }
    let start = f.grid.theta(0) - 0.5 * h;
    let density_quantile = |u: f64| -> f64 {
        let k = cdf.partition_point(|c| *c <= u).clamp(1, w.len()) - 1;
        let width = cdf[k + 1] - cdf[k];
        let r = if width > 0.0 { (u - cdf[k]) / width } else { 0.5 };
        start + (k as f64 + r.clamp(0.0, 1.0)) * h
    };
    let levels: Vec<f64> = (0..QUANTILE_LEVELS).map(|j| (j as f64 + 0.5) / QUANTILE_LEVELS as f64).collect();
    let g: Vec<f64> = levels.iter().map(|u| density_quantile(*u)).collect();

    // lifted empirical quantile, F⁻¹(u + m) = F⁻¹(u) + 2πm
    let emp = |u: f64| -> f64 {
        let m = u.floor();
        let r = u - m;
        let i = ((r * n as f64).floor() as usize).min(n - 1);
        angles[i] + tau * m
    };
    let cost = |alpha: f64| -> f64 {
        levels
            .iter()
            .zip(&g)
            .map(|(u, gu)| (emp(u + alpha) - gu).powi(2))
            .sum::<f64>()
            / QUANTILE_LEVELS as f64
    };
    // coarse scan over the cut, then golden-section refinement around the best bracket
    let scan = 256;
    let (mut best_a, mut best_c) = (0.0, f64::INFINITY);
    for j in 0..=scan {
        let a = -1.0 + 2.0 * j as f64 / scan as f64;
        let c = cost(a);
        if c < best_c {
            best_a = a;
            best_c = c;
        }
    }
    let step = 2.0 / scan as f64;
    let (mut lo, mut hi) = (best_a - step, best_a + step);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        if cost(m1) < cost(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    Ok(best_c.min(cost(0.5 * (lo + hi))).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SphereGridS1;
    use crate::kinetic::SpatialGrid;
    use crate::presets;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for i in 0..=p.len() {
                let mut q = p.clone();
                q.insert(i, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn hungarian_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 1..=6 {
            for _ in 0..20 {
                let cost: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>()).collect();
                let a = hungarian(&cost, n);
                let got: f64 = a.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
                let best = permutations(n)
                    .iter()
                    .map(|p| p.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum::<f64>())
                    .fold(f64::INFINITY, f64::min);
                assert!((got - best).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn permuted_sets_are_at_distance_zero() {
        let a = vec![vec![1.0, 0.0], vec![-1.0, 0.0]];
        let b = vec![vec![-1.0, 0.0], vec![1.0, 0.0]];
        assert_eq!(wasserstein2_empirical(&a, &b).unwrap().value, 0.0);
        assert_eq!(wasserstein2_empirical(&a, &a).unwrap().value, 0.0);
        assert!(wasserstein2_empirical(&a, &b[..1]).is_err());
    }

    #[test]
    fn large_sets_report_the_bound() {
        let a: Vec<Vec<f64>> = (0..600).map(|i| vec![i as f64]).collect();
        let e = wasserstein2_empirical(&a, &a).unwrap();
        assert!(!e.exact);
        assert_eq!(e.value, 0.0);
    }

    fn uniform_points(n: usize, offset: f64) -> Vec<Vector<2>> {
        (0..n)
            .map(|i| {
                let t = std::f64::consts::TAU * (i as f64 + offset) / n as f64;
                Vector::<2>::new(t.cos(), t.sin())
            })
            .collect()
    }

    #[test]
    fn equispaced_points_are_close_to_uniform() {
        let g = SphereGridS1::new(64).unwrap();
        let f = KineticState::uniform(SpatialGrid::Homogeneous, g.clone(), 1.0).unwrap();
        let w = w2_empirical_to_density(&uniform_points(64, 0.3), &f).unwrap();
        assert!(w <= g.spacing(), "{w}");
    }

    #[test]
    fn concentrated_points_match_narrow_von_mises() {
        let g = SphereGridS1::new(512).unwrap();
        let f = presets::vonmises_state(SpatialGrid::Homogeneous, g, 200.0).unwrap();
        let pts = vec![Vector::<2>::x(); 50];
        let w = w2_empirical_to_density(&pts, &f).unwrap();
        // the vM(200) angular standard deviation is about 1/√200
        assert!(w < 0.15 && w > 0.05, "{w}");
    }

    #[test]
    fn dense_equispaced_points_match_uniform() {
        let g = SphereGridS1::new(256).unwrap();
        let f = KineticState::uniform(SpatialGrid::Homogeneous, g, 1.0).unwrap();
        let n = 4096;
        let w = w2_empirical_to_density(&uniform_points(n, 0.0), &f).unwrap();
        // quantile gap of a uniform grid of n points is at most 2π/n
        assert!(w <= std::f64::consts::TAU / n as f64 + 1e-3);
    }
}
