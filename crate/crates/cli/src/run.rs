//! One function per subcommand. Each writes its tables and a manifest into the
//! output directory, then turns failed invariant checks into an error.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use vicsek_core::coefficients::{constants_report, ConstantsReport};
use vicsek_core::kinetic::{
    exponential_floor_applies, flux_floor_check, free_energy_and_dissipation, lp_growth_check, solve_nonlinear,
    AlignmentField, EnergyReport, FloorCheck, FloorTolerance, KineticState, KineticTrajectory, LpCheck,
};
use vicsek_core::meanfield::{
    chaos_sweep, coupled_run, flux_probability_estimate, kinetic_initial, FluxProbability,
    KineticReference, SweepAggregate,
};
use vicsek_core::particles::{simulate, Trajectory, VELOCITY_NORM_TOL};

use crate::config::{KineticSection, ResolvedConfig};
use crate::error::{CliError, InModule};
use crate::output::{num, write_manifest, Table};

const MASS_TOL: f64 = 1e-10;
const POSITIVITY_TOL: f64 = 1e-12;
const LP_TOL: f64 = 1e-6;

fn finish<R: Serialize>(
    dir: &Path,
    subcommand: &str,
    cfg: &ResolvedConfig,
    tables: &[&str],
    results: &R,
    failures: Vec<String>,
) -> Result<(), CliError> {
    write_manifest(dir, subcommand, cfg, tables, results)?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(failures.join("; ")))
    }
}

#[derive(Debug, Serialize)]
struct HorizonRow {
    t: f64,
    c_star: f64,
    lambda: f64,
}

#[derive(Debug, Serialize)]
struct ConstantsResults {
    report: ConstantsReport,
    lambda_t1: f64,
    horizons: Vec<HorizonRow>,
}

pub fn constants(cfg: &ResolvedConfig, dir: &Path) -> Result<(), CliError> {
    let c = &cfg.constants;
    let f0 = kinetic_initial(&cfg.initial, &cfg.domain, c.n_theta, c.n_x).in_module("kinetic-solver")?;
    let report = constants_report(&f0, cfg.coefficients(), c.p).in_module("coefficients")?;
    let horizons: Vec<HorizonRow> = c
        .horizons
        .iter()
        .map(|&t| HorizonRow {
            t,
            c_star: report.c_star(t),
            lambda: report.lambda(t),
        })
        .collect();
    let mut failures = Vec::new();
    if !(report.t1 <= report.t0) {
        failures.push(format!("T1 = {} exceeds T0 = {}", report.t1, report.t0));
    }
    let lambda_t1 = report.lambda(report.t1);
    if !(lambda_t1 <= 0.25 + 1e-9) {
        failures.push(format!("Lambda(T1) = {lambda_t1} exceeds 1/4"));
    }
    let probes = (0..64).map(|k| report.t1 * k as f64 / 64.0);
    let user = horizons.iter().filter(|h| h.t < report.t1).map(|h| h.t);
    if let Some(t) = probes.chain(user).find(|&t| !(report.c_star(t) > 0.0)) {
        failures.push(format!("c*({t}) = {} is not positive below T1", report.c_star(t)));
    }
    let results = ConstantsResults {
        report,
        lambda_t1,
        horizons,
    };
    let text = toml::to_string(&results)?;
    std::fs::write(dir.join("constants.toml"), &text)?;
    print!("{text}");
    finish(dir, "constants", cfg, &["constants.toml"], &results, failures)
}

#[derive(Debug, Serialize)]
struct ParticleResults {
    dim: usize,
    replicas: u64,
    snapshots_per_replica: usize,
    max_norm_defect: f64,
    min_flux_norm: f64,
    warnings: Vec<String>,
}

pub fn particles(cfg: &ResolvedConfig, dir: &Path) -> Result<(), CliError> {
    let p = cfg.section(&cfg.particles, "particles")?;
    match p.dim {
        2 => particles_in::<2>(cfg, dir),
        _ => particles_in::<3>(cfg, dir),
    }
}

fn particles_in<const D: usize>(cfg: &ResolvedConfig, dir: &Path) -> Result<(), CliError> {
    let p = cfg.section(&cfg.particles, "particles")?;
    let sim = cfg.sim_config(p);
    let mut warnings = sim.validate(cfg.coefficients(), D).in_module("particle-sim")?;
    let runs: Vec<Trajectory<D>> = (0..p.replicas)
        .into_par_iter()
        .map(|r| simulate::<D>(&sim, cfg.coefficients(), &cfg.regularization, &cfg.initial, p.n, cfg.seed.0, r))
        .collect::<Result<_, _>>()
        .in_module("particle-sim")?;

    let mut header = vec!["replica".to_string(), "t".into(), "i".into()];
    header.extend((1..=D).map(|k| format!("x_{k}")));
    header.extend((1..=D).map(|k| format!("v_{k}")));
    header.push("flux_norm".into());
    let mut table = Table::create_owned(dir, "particles.csv", header)?;
    let mut summary = Table::create(
        dir,
        "summary.csv",
        &["replica", "t", "mean_v_norm", "min_flux_norm", "free_energy", "dissipation"],
    )?;
    let mut max_defect: f64 = 0.0;
    let mut min_flux = f64::INFINITY;
    for tr in &runs {
        warnings.extend(tr.warnings.iter().map(|w| format!("replica {}: {w}", tr.replica)));
        for s in &tr.snapshots {
            let (rep, t) = (tr.replica.to_string(), num(s.t));
            for (i, ((x, v), j)) in s.positions.iter().zip(&s.velocities).zip(&s.flux_norms).enumerate() {
                max_defect = max_defect.max((v.norm() - 1.0).abs());
                let mut row = vec![rep.clone(), t.clone(), i.to_string()];
                row.extend(x.iter().map(|c| num(*c)));
                row.extend(v.iter().map(|c| num(*c)));
                row.push(num(*j));
                table.row(&row)?;
            }
            min_flux = min_flux.min(s.min_flux_norm);
            // free energy is defined for densities only; the columns stay empty
            summary.row(&[rep, t, num(s.mean_velocity_norm), num(s.min_flux_norm), String::new(), String::new()])?;
        }
    }
    table.finish()?;
    summary.finish()?;
    let mut failures = Vec::new();
    if sim.renormalize && max_defect > VELOCITY_NORM_TOL {
        failures.push(format!("max ||V| - 1| = {max_defect:e} exceeds {VELOCITY_NORM_TOL:e}"));
    }
    let results = ParticleResults {
        dim: D,
        replicas: p.replicas,
        snapshots_per_replica: runs.first().map_or(0, |t| t.snapshots.len()),
        max_norm_defect: max_defect,
        min_flux_norm: min_flux,
        warnings,
    };
    finish(dir, "particles", cfg, &["particles.csv", "summary.csv"], &results, failures)
}

struct KineticRun {
    f0: KineticState,
    trajectory: KineticTrajectory,
    energy: EnergyReport,
    report: Option<ConstantsReport>,
    notes: Vec<String>,
}

/// Rows kept when a per-step series is thinned by `stride`; the last row is always kept.
fn kept(n: usize, len: usize, stride: usize) -> bool {
    n.is_multiple_of(stride) || n + 1 == len
}

/// Stores every step, since the energy identity is checked per step;
/// `snapshot_stride` only thins the written tables.
fn solve_kinetic(cfg: &ResolvedConfig, k: &KineticSection) -> Result<KineticRun, CliError> {
    cfg.coefficients().validate(2).in_module("coefficients")?;
    let f0 = kinetic_initial(&cfg.initial, &cfg.domain, k.n_theta, k.n_x).in_module("kinetic-solver")?;
    let mut kc = ResolvedConfig::kinetic_config(k);
    kc.snapshot_stride = 1;
    let trajectory = solve_nonlinear(&f0, cfg.coefficients(), &k.field, &kc).in_module("kinetic-solver")?;
    let energy = free_energy_and_dissipation(&trajectory.snapshots, cfg.coefficients(), &k.field)
        .in_module("kinetic-solver")?;
    let mut notes = trajectory.warnings.clone();
    let report = match constants_report(&f0, cfg.coefficients(), cfg.constants.p) {
        Ok(r) => Some(r),
        Err(e) => {
            notes.push(format!("constants unavailable, floor and Lp checks skipped: {e}"));
            None
        }
    };
    Ok(KineticRun {
        f0,
        trajectory,
        energy,
        report,
        notes,
    })
}

#[derive(Debug, Serialize)]
struct KineticResults {
    steps: usize,
    mass_initial: f64,
    max_mass_error: f64,
    min_f: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    constants: Option<ConstantsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    flux_floor: Option<FloorCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lp_growth: Option<LpCheck>,
    notes: Vec<String>,
}

pub fn kinetic(cfg: &ResolvedConfig, dir: &Path) -> Result<(), CliError> {
    let k = cfg.section(&cfg.kinetic, "kinetic")?;
    let run = solve_kinetic(cfg, k)?;
    let tr = &run.trajectory;
    let m0 = run.f0.mass();

    let len = tr.snapshots.len();
    let mut snap = Table::create(dir, "snapshot.csv", &["t", "x_index", "theta_index", "f"])?;
    for (n, s) in tr.snapshots.iter().enumerate() {
        if !kept(n, len, k.snapshot_stride) {
            continue;
        }
        let t = num(s.t);
        for i in 0..s.n_x() {
            for (j, v) in s.slice(i).iter().enumerate() {
                snap.row(&[t.clone(), i.to_string(), j.to_string(), num(*v)])?;
            }
        }
    }
    snap.finish()?;

    let mut diag = Table::create(
        dir,
        "diagnostics.csv",
        &["t", "mass", "l2", "linf", "min_flux", "F", "D", "residual"],
    )?;
    let t_start = run.f0.t;
    let last = tr.flux_records.len() - 1;
    let (mut mass_err, mut min_f): (f64, f64) = (0.0, f64::INFINITY);
    for (n, (s, e)) in tr.snapshots.iter().zip(&run.energy.samples).enumerate() {
        mass_err = mass_err.max((s.mass() - m0).abs());
        min_f = min_f.min(s.min());
        if !kept(n, len, k.snapshot_stride) {
            continue;
        }
        let step = (((s.t - t_start) / k.dt).round() as usize).min(last);
        diag.row(&[
            num(s.t),
            num(s.mass()),
            num(s.lp_norm(2.0)),
            num(s.lp_norm(f64::INFINITY)),
            num(tr.flux_records[step].min_flux),
            num(e.free_energy),
            num(e.dissipation),
            num(e.residual),
        ])?;
    }
    diag.finish()?;

    let mut failures = Vec::new();
    if mass_err > MASS_TOL * m0.max(1.0) {
        failures.push(format!("mass drifted by {mass_err:e}"));
    }
    if min_f < -POSITIVITY_TOL {
        failures.push(format!("min f = {min_f:e} is negative"));
    }
    let (mut flux_floor, mut lp_growth) = (None, None);
    if let Some(rep) = &run.report {
        // the floors are statements about the exact field
        if k.field == AlignmentField::Exact {
            let exp = exponential_floor_applies(cfg.coefficients(), &run.f0);
            let fc = flux_floor_check(&tr.flux_records, rep, exp, &FloorTolerance::default())
                .in_module("kinetic-solver")?;
            if !fc.passed {
                failures.push(format!("flux floor violated at t = {:?}", fc.first_violation));
            }
            flux_floor = Some(fc);
        }
        let lc = lp_growth_check(&tr.snapshots, rep.p, rep, LP_TOL).in_module("kinetic-solver")?;
        if !lc.passed {
            failures.push(format!("Lp growth bound violated at t = {:?}", lc.first_violation));
        }
        lp_growth = Some(lc);
    }
    let results = KineticResults {
        steps: len - 1,
        mass_initial: m0,
        max_mass_error: mass_err,
        min_f,
        constants: run.report,
        flux_floor,
        lp_growth,
        notes: run.notes,
    };
    finish(dir, "kinetic", cfg, &["snapshot.csv", "diagnostics.csv"], &results, failures)
}

#[derive(Debug, Serialize)]
struct EnergyResults {
    samples: usize,
    monotone: bool,
    max_relative_residual: f64,
    energy_tol: f64,
    notes: Vec<String>,
}

pub fn energy(cfg: &ResolvedConfig, dir: &Path) -> Result<(), CliError> {
    let k = cfg.section(&cfg.kinetic, "kinetic")?;
    let run = solve_kinetic(cfg, k)?;
    let samples = &run.energy.samples;
    let mut table = Table::create(
        dir,
        "energy.csv",
        &["t", "entropy", "correction_integral", "F", "D", "residual"],
    )?;
    for (n, e) in samples.iter().enumerate() {
        if kept(n, samples.len(), k.snapshot_stride) {
            table.row(&[
                num(e.t),
                num(e.entropy),
                num(e.correction_integral),
                num(e.free_energy),
                num(e.dissipation),
                num(e.residual),
            ])?;
        }
    }
    table.finish()?;
    let monotone = run.energy.is_monotone(0.0);
    let residual = run.energy.max_relative_residual();
    let mut failures = Vec::new();
    if !monotone {
        failures.push("free energy increased between samples".into());
    }
    if !(residual <= k.energy_tol) {
        failures.push(format!("energy identity residual {residual:e} exceeds {:e}", k.energy_tol));
    }
    let results = EnergyResults {
        samples: samples.len(),
        monotone,
        max_relative_residual: residual,
        energy_tol: k.energy_tol,
        notes: run.notes,
    };
    finish(dir, "energy", cfg, &["energy.csv"], &results, failures)
}

pub fn coupling(cfg: &ResolvedConfig, dir: &Path) -> Result<(), CliError> {
    let c = cfg.section(&cfg.coupling, "coupling")?;
    let cc = cfg.coupling_config(c);
    let reference = KineticReference::solve(&cc, cfg.coefficients()).in_module("meanfield-harness")?;
    let r = coupled_run(c.n, c.replica, cfg.seed.0, &cc, cfg.coefficients(), &cfg.regularization, &reference)
        .in_module("meanfield-harness")?;
    let mut table = Table::create(
        dir,
        "coupling.csv",
        &["N", "replica", "sup_t_msd", "w2_final", "min_flux", "observable_error"],
    )?;
    table.row(&[
        r.n.to_string(),
        r.replica.to_string(),
        num(r.sup_t_msd),
        num(r.w2_final),
        num(r.min_flux),
        num(r.observable_error),
    ])?;
    table.finish()?;
    finish(dir, "coupling", cfg, &["coupling.csv"], &r, Vec::new())
}

/// `max(0, 1 − ε̂/(c* − ε₀))` when `T < T₁` and `c*(T) > ε₀`, NaN otherwise.
fn probability_floor(eps_hat: f64, eps0: f64, t: f64, report: Option<&ConstantsReport>) -> f64 {
    match report {
        Some(r) if t < r.t1 && r.c_star(t) > eps0 => (1.0 - eps_hat / (r.c_star(t) - eps0)).max(0.0),
        _ => f64::NAN,
    }
}

#[derive(Debug, Serialize)]
struct SweepResults {
    monotone: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    c_star: Option<f64>,
    aggregates: Vec<SweepAggregate>,
    notes: Vec<String>,
}

pub fn sweep(cfg: &ResolvedConfig, dir: &Path) -> Result<(), CliError> {
    let c = cfg.section(&cfg.coupling, "coupling")?;
    let s = cfg.section(&cfg.sweep, "sweep")?;
    let cc = cfg.coupling_config(c);
    let reference = KineticReference::solve(&cc, cfg.coefficients()).in_module("meanfield-harness")?;
    let report = chaos_sweep(&s.ns, s.replicas, cfg.seed.0, &cc, cfg.coefficients(), &cfg.regularization, &reference)
        .in_module("meanfield-harness")?;
    let mut notes = Vec::new();
    let constants = match constants_report(&reference.trajectory.snapshots[0], cfg.coefficients(), cfg.constants.p) {
        Ok(r) => Some(r),
        Err(e) => {
            notes.push(format!("constants unavailable, prob_floor is NaN: {e}"));
            None
        }
    };
    let eps0 = cfg.regularization.eps0;

    let mut rows = Table::create(
        dir,
        "sweep.csv",
        &["N", "replica", "sup_t_msd", "w2_final", "min_flux", "flux_ok_flag"],
    )?;
    for r in &report.rows {
        rows.row(&[
            r.n.to_string(),
            r.replica.to_string(),
            num(r.sup_t_msd),
            num(r.w2_final),
            num(r.min_flux),
            u8::from(r.flux_ok).to_string(),
        ])?;
    }
    rows.finish()?;
    let mut agg = Table::create(
        dir,
        "aggregate.csv",
        &["N", "eps_hat_median", "eps_hat_iqr", "prob_empirical", "prob_floor"],
    )?;
    for a in &report.aggregates {
        agg.row(&[
            a.n.to_string(),
            num(a.eps_hat_median),
            num(a.eps_hat_iqr),
            num(a.prob_empirical),
            num(probability_floor(a.eps_hat_median, eps0, c.t_end, constants.as_ref())),
        ])?;
    }
    agg.finish()?;
    let results = SweepResults {
        monotone: report.monotone,
        c_star: constants.as_ref().map(|r| r.c_star(c.t_end)),
        aggregates: report.aggregates,
        notes,
    };
    // a non-monotone ε̂(N) is a statistical outcome, not a broken invariant
    finish(dir, "sweep", cfg, &["sweep.csv", "aggregate.csv"], &results, Vec::new())
}

#[derive(Debug, Serialize)]
struct FluxProbResults {
    t_end: f64,
    eps0: f64,
    t1: f64,
    runs: Vec<FluxProbSummary>,
}

#[derive(Debug, Serialize)]
struct FluxProbSummary {
    n: usize,
    successes: u64,
    prob_empirical: f64,
    prob_floor: f64,
}

pub fn fluxprob(cfg: &ResolvedConfig, dir: &Path) -> Result<(), CliError> {
    let c = cfg.section(&cfg.coupling, "coupling")?;
    let fp = cfg.section(&cfg.fluxprob, "fluxprob")?;
    cfg.coefficients().validate(2).in_module("coefficients")?;
    let cc = cfg.coupling_config(c);
    let f0 = kinetic_initial(&cfg.initial, &cfg.domain, cc.n_theta, cc.n_x).in_module("kinetic-solver")?;
    let report = constants_report(&f0, cfg.coefficients(), cfg.constants.p).in_module("coefficients")?;
    let t_end = fp.t_end.unwrap_or_else(|| fp.horizon_fraction.unwrap_or(0.0) * report.t1);
    let eps0 = fp.eps0.unwrap_or_else(|| fp.eps0_fraction.unwrap_or(0.0) * report.c_star(t_end));
    let runs: Vec<FluxProbability> = fp
        .ns
        .iter()
        .map(|&n| {
            flux_probability_estimate(
                n,
                t_end,
                eps0,
                fp.replicas,
                cfg.seed.0,
                &cc,
                cfg.coefficients(),
                &report,
                fp.eps_hat,
            )
        })
        .collect::<Result<_, _>>()
        .in_module("meanfield-harness")?;

    let mut rows = Table::create(dir, "fluxprob.csv", &["N", "replica", "min_flux", "flux_ok_flag"])?;
    for p in &runs {
        for (r, m) in p.min_flux.iter().enumerate() {
            rows.row(&[p.n.to_string(), r.to_string(), num(*m), u8::from(*m > eps0).to_string()])?;
        }
    }
    rows.finish()?;
    let mut agg = Table::create(
        dir,
        "fluxprob_aggregate.csv",
        &["N", "successes", "replicas", "prob_empirical", "prob_floor"],
    )?;
    for p in &runs {
        agg.row(&[
            p.n.to_string(),
            p.successes.to_string(),
            p.replicas.to_string(),
            num(p.prob_empirical),
            num(p.prob_floor),
        ])?;
    }
    agg.finish()?;
    let results = FluxProbResults {
        t_end,
        eps0,
        t1: report.t1,
        runs: runs
            .iter()
            .map(|p| FluxProbSummary {
                n: p.n,
                successes: p.successes,
                prob_empirical: p.prob_empirical,
                prob_floor: p.prob_floor,
            })
            .collect(),
    };
    finish(dir, "fluxprob", cfg, &["fluxprob.csv", "fluxprob_aggregate.csv"], &results, Vec::new())
}
