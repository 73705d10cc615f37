//! ε(N) sweeps and the flux probability estimate.

use rayon::prelude::*;
use serde::Serialize;

use super::coupling::{coupled_run, CouplingConfig, CouplingReplica, KineticReference};
use crate::coefficients::{CoefficientSet, ConstantsReport, RegularizationSpec};
use crate::error::{Result, VicsekError};
use crate::particles::{simulate, ItoCorrectionSign, SimConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub replica: u64,
    pub sup_t_msd: f64,
    pub w2_final: f64,
    pub min_flux: f64,
    pub flux_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepAggregate {
    pub n: usize,
    pub eps_hat_median: f64,
    pub eps_hat_iqr: f64,
    pub eps_hat_mean: f64,
    /// `E|(1/N) Σ V¹ − ∫ ω₁ f_T|²` over replicas.
    pub observable_mse: f64,
    /// Fraction of replicas with `inf |J(μ^N)| > ε₀`.
    pub prob_empirical: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub aggregates: Vec<SweepAggregate>,
    /// Median ε̂(N) is non-increasing along the sweep.
    pub monotone: bool,
}

/// Linear-interpolation quantile of an unsorted sample.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Runs `replicas` coupled replicas for every `N`; replicas run in parallel and
/// are collected in index order, so the report does not depend on the thread count.
#[allow(clippy::too_many_arguments)]
pub fn chaos_sweep(
    ns: &[usize],
    replicas: u64,
    seed: u64,
    config: &CouplingConfig,
    coeffs: &CoefficientSet,
    reg: &RegularizationSpec,
    reference: &KineticReference,
) -> Result<SweepReport> {
    if ns.is_empty() || ns.windows(2).any(|w| w[1] <= w[0]) || ns[0] == 0 {
        return Err(VicsekError::InvalidInput("particle counts must be positive and increasing".into()));
    }
    if replicas == 0 {
        return Err(VicsekError::InvalidInput("need at least one replica".into()));
    }
    let mut rows = Vec::new();
    let mut aggregates = Vec::new();
    for &n in ns {
        let runs: Vec<Result<CouplingReplica>> = (0..replicas)
            .into_par_iter()
            .map(|r| coupled_run(n, r, seed, config, coeffs, reg, reference))
            .collect();
        let runs: Vec<CouplingReplica> = runs.into_iter().collect::<Result<_>>()?;
        let msd: Vec<f64> = runs.iter().map(|r| r.sup_t_msd).collect();
        let ok = runs.iter().filter(|r| r.min_flux > reg.eps0).count();
        aggregates.push(SweepAggregate {
            n,
            eps_hat_median: median(&msd),
            eps_hat_iqr: quantile(&msd, 0.75) - quantile(&msd, 0.25),
            eps_hat_mean: msd.iter().sum::<f64>() / msd.len() as f64,
            observable_mse: runs.iter().map(|r| r.observable_error.powi(2)).sum::<f64>() / runs.len() as f64,
            prob_empirical: ok as f64 / runs.len() as f64,
        });
        rows.extend(runs.into_iter().map(|r| SweepRow {
            n,
            replica: r.replica,
            sup_t_msd: r.sup_t_msd,
            w2_final: r.w2_final,
            flux_ok: r.min_flux > reg.eps0,
            min_flux: r.min_flux,
        }));
    }
    let monotone = aggregates
        .windows(2)
        .all(|w| w[1].eps_hat_median <= w[0].eps_hat_median);
    Ok(SweepReport {
        rows,
        aggregates,
        monotone,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluxProbability {
    pub n: usize,
    pub t_end: f64,
    pub eps0: f64,
    pub c_star: f64,
    pub replicas: u64,
    pub successes: u64,
    pub prob_empirical: f64,
    /// `max(0, 1 − ε̂(N)/(c* − ε₀))`; NaN when no ε̂(N) was supplied.
    pub prob_floor: f64,
    /// Per-replica `inf` over sampled times and particles of `|J(μ^N)|`.
    pub min_flux: Vec<f64>,
}

/// Fraction of replicas whose empirical flux stays above `eps0` on `[0, T]`.
#[allow(clippy::too_many_arguments)]
pub fn flux_probability_estimate(
    n: usize,
    t_end: f64,
    eps0: f64,
    replicas: u64,
    seed: u64,
    config: &CouplingConfig,
    coeffs: &CoefficientSet,
    report: &ConstantsReport,
    eps_hat: Option<f64>,
) -> Result<FluxProbability> {
    if !(t_end >= 0.0 && t_end < report.t1) {
        return Err(VicsekError::InvalidHorizon {
            t: t_end,
            limit: report.t1,
        });
    }
    let c_star = report.c_star(t_end);
    if !(eps0 > 0.0 && eps0 < c_star) {
        return Err(VicsekError::InvalidThreshold { eps0, c_star });
    }
    if replicas == 0 {
        return Err(VicsekError::InvalidInput("need at least one replica".into()));
    }
    config.validate()?;
    let reg = RegularizationSpec::new(eps0)?;
    let sim = SimConfig {
        dt: config.dt,
        t_end,
        scheme: config.scheme,
        variant: config.variant,
        renormalize: config.renormalize,
        ito_sign: ItoCorrectionSign::Derived,
        domain: config.domain.clone(),
        snapshot_stride: config.snapshot_stride,
    };
    let runs: Vec<Result<f64>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let tr = simulate::<2>(&sim, coeffs, &reg, &config.initial, n, seed, r)?;
            Ok(tr
                .snapshots
                .iter()
                .map(|s| s.min_flux_norm)
                .fold(f64::INFINITY, f64::min))
        })
        .collect();
    let min_flux: Vec<f64> = runs.into_iter().collect::<Result<_>>()?;
    let successes = min_flux.iter().filter(|m| **m > eps0).count() as u64;
    Ok(FluxProbability {
        n,
        t_end,
        eps0,
        c_star,
        replicas,
        successes,
        prob_empirical: successes as f64 / replicas as f64,
        prob_floor: eps_hat.map_or(f64::NAN, |e| (1.0 - e / (c_star - eps0)).max(0.0)),
        min_flux,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{constants_report, Friction, Kernel, OrientationProfile, SpatialProfile, Viscosity};
    use crate::kinetic::AlignmentField;
    use crate::meanfield::kinetic_initial;
    use crate::presets;

    #[test]
    fn quantiles() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(median(&v), 2.5);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(quantile(&v, 0.25), 1.75);
    }

    #[test]
    fn measure_independent_sweep_is_zero() {
        let c = CoefficientSet {
            speed: 1.0,
            alpha: 0.0,
            kernel: Kernel::new(SpatialProfile::Uniform, OrientationProfile::Constant { value: vec![0.0, 0.0] }),
            friction: Friction::Constant { value: 0.0 },
            viscosity: Viscosity::Constant { value: 0.5 },
        };
        let mut cfg = CouplingConfig::homogeneous(0.01, 0.2, 1.0);
        cfg.n_theta = 64;
        cfg.kinetic_field = AlignmentField::Regularized { eps0: 0.1 };
        let reg = RegularizationSpec::new(0.1).unwrap();
        let r = KineticReference::solve(&cfg, &c).unwrap();
        let s = chaos_sweep(&[8, 32], 4, 1, &cfg, &c, &reg, &r).unwrap();
        assert!(s.aggregates.iter().all(|a| a.eps_hat_median == 0.0));
        assert!(s.monotone);
        assert_eq!(s.rows.len(), 8);
        assert!(chaos_sweep(&[32, 8], 4, 1, &cfg, &c, &reg, &r).is_err());
    }

    #[test]
    fn sweep_is_thread_count_independent() {
        let c = presets::classic_vicsek(1.0, 1.0);
        let mut cfg = CouplingConfig::homogeneous(0.02, 0.1, 2.0);
        cfg.n_theta = 64;
        let reg = RegularizationSpec::new(0.05).unwrap();
        let r = KineticReference::solve(&cfg, &c).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let a = one.install(|| chaos_sweep(&[8, 16], 3, 2, &cfg, &c, &reg, &r)).unwrap();
        let b = chaos_sweep(&[8, 16], 3, 2, &cfg, &c, &reg, &r).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn flux_probability_preconditions() {
        let c = presets::classic_vicsek(1.0, 1.0);
        let cfg = CouplingConfig::homogeneous(0.001, 0.0, 16.0);
        let f0 = kinetic_initial(&cfg.initial, &cfg.domain, 256, 1).unwrap();
        let rep = constants_report(&f0, &c, 2.0).unwrap();
        let t = 0.5 * rep.t1;
        let cs = rep.c_star(t);
        assert!(matches!(
            flux_probability_estimate(16, t, cs, 2, 0, &cfg, &c, &rep, None),
            Err(VicsekError::InvalidThreshold { .. })
        ));
        assert!(matches!(
            flux_probability_estimate(16, rep.t1, 0.1, 2, 0, &cfg, &c, &rep, None),
            Err(VicsekError::InvalidHorizon { .. })
        ));
        let p = flux_probability_estimate(256, t, cs / 4.0, 4, 0, &cfg, &c, &rep, Some(0.0)).unwrap();
        assert!((0.0..=1.0).contains(&p.prob_empirical));
        assert_eq!(p.prob_floor, 1.0);
    }
}
