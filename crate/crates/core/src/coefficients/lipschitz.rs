use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, VicsekError};

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Empirical Lipschitz constant `max |map(a) − map(b)| / |a − b|` over all
/// pairs of `n_samples` points drawn by `sampler`. Points and images are
/// compared in the Euclidean norm of their flattened coordinates; coincident
/// pairs are skipped.
pub fn lipschitz_probe<M, S>(map: M, mut sampler: S, n_samples: usize, seed: u64) -> Result<f64>
where
    M: Fn(&[f64]) -> Vec<f64>,
    S: FnMut(&mut ChaCha8Rng) -> Vec<f64>,
{
    if n_samples < 2 {
        return Err(VicsekError::InvalidInput(format!(
            "lipschitz_probe needs at least 2 samples, got {n_samples}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<f64>> = (0..n_samples).map(|_| sampler(&mut rng)).collect();
    let images: Vec<Vec<f64>> = points.iter().map(|p| map(p)).collect();
    let mut best = 0.0f64;
    for i in 0..n_samples {
        for j in i + 1..n_samples {
            let d = euclidean(&points[i], &points[j]);
            if d == 0.0 {
                continue;
            }
            best = best.max(euclidean(&images[i], &images[j]) / d);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::RegularizationSpec;
    use crate::Vector;
    use rand::Rng;

    #[test]
    fn identity_and_constant() {
        let s = |r: &mut ChaCha8Rng| vec![r.random_range(-1.0..1.0)];
        let id = lipschitz_probe(|x| x.to_vec(), s, 50, 1).unwrap();
        assert!(id <= 1.0 + 1e-12 && id > 0.99);
        let c = lipschitz_probe(|_| vec![3.0], s, 50, 1).unwrap();
        assert_eq!(c, 0.0);
        assert!(lipschitz_probe(|x| x.to_vec(), s, 1, 1).is_err());
    }

    #[test]
    fn reproducible() {
        let s = |r: &mut ChaCha8Rng| vec![r.random_range(-1.0..1.0), r.random::<f64>()];
        let m = |x: &[f64]| vec![x[0].sin() * x[1]];
        assert_eq!(
            lipschitz_probe(m, s, 40, 9).unwrap(),
            lipschitz_probe(m, s, 40, 9).unwrap()
        );
    }

    #[test]
    fn tau_eps0_over_small_empirical_measures() {
        // input: three unit velocities of an empirical measure with K = ω*;
        // output: τ_{ε₀} of their mean, α = 0
        let reg = RegularizationSpec::new(0.2).unwrap();
        let sampler = |r: &mut ChaCha8Rng| {
            (0..3)
                .flat_map(|_| {
                    let t: f64 = r.random_range(0.0..std::f64::consts::TAU);
                    [t.cos(), t.sin()]
                })
                .collect()
        };
        let map = |x: &[f64]| {
            let j = Vector::<2>::new(x[0] + x[2] + x[4], x[1] + x[3] + x[5]) / 3.0;
            let t = reg.tau_of_flux(&j, 0.0);
            vec![t[0], t[1]]
        };
        let a = lipschitz_probe(map, sampler, 300, 3).unwrap();
        let b = lipschitz_probe(map, sampler, 600, 3).unwrap();
        assert!(a.is_finite() && b.is_finite());
        // |∂τ/∂J| ≤ 1/ε₀ and |∂J/∂x| = 1/√3 per flattened coordinate block
        assert!(b <= 1.0 / (0.2 * 3f64.sqrt()) + 1e-9);
        assert!((b - a).abs() <= 0.2 * a);
    }
}
