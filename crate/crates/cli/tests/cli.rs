use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const CLASSIC: &str = r#"
seed = 11

[model]
preset = "classic-vicsek"
nu = 1.0
sigma = 1.0

[kinetic]
n_theta = 64
dt = 0.01
t_end = 0.3
snapshot_stride = 5

[particles]
n = 24
replicas = 3
dt = 0.01
t_end = 0.1

[coupling]
n = 32
dt = 0.02
t_end = 0.1
n_theta = 64

[sweep]
ns = [8, 32]
replicas = 3

[fluxprob]
ns = [16]
replicas = 3
horizon_fraction = 0.5
eps0_fraction = 0.25
"#;

fn vicsek(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("config.toml");
    fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_vicsek"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn constants_emits_positive_fields() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("run");
    let o = vicsek(tmp.path(), CLASSIC, &["constants", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: toml::Table = fs::read_to_string(out.join("constants.toml")).unwrap().parse().unwrap();
    let report = v["report"].as_table().unwrap();
    for key in ["m0", "j0", "t0", "t1"] {
        assert!(report[key].as_float().unwrap() > 0.0, "{key}");
    }
    assert!(v["lambda_t1"].as_float().unwrap() <= 0.25 + 1e-9);
    let manifest: toml::Table = fs::read_to_string(out.join("manifest.toml")).unwrap().parse().unwrap();
    assert_eq!(manifest["artifact"]["version"].as_str(), Some(env!("CARGO_PKG_VERSION")));
    assert_eq!(manifest["config"]["model"]["preset"].as_str(), Some("classic-vicsek"));
    assert_eq!(manifest["config"]["seed"].as_integer(), Some(11));
}

#[test]
fn tables_have_documented_headers() {
    let tmp = TempDir::new().unwrap();
    let run = |cmd: &str| {
        let out = tmp.path().join(cmd);
        let o = vicsek(tmp.path(), CLASSIC, &[cmd, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{cmd}: {}", stderr(&o));
        out
    };
    let k = run("kinetic");
    assert_eq!(header(&k.join("snapshot.csv")), "t,x_index,theta_index,f");
    assert_eq!(header(&k.join("diagnostics.csv")), "t,mass,l2,linf,min_flux,F,D,residual");
    let p = run("particles");
    assert_eq!(header(&p.join("particles.csv")), "replica,t,i,x_1,x_2,v_1,v_2,flux_norm");
    assert_eq!(
        header(&p.join("summary.csv")),
        "replica,t,mean_v_norm,min_flux_norm,free_energy,dissipation"
    );
    let s = run("sweep");
    assert_eq!(header(&s.join("sweep.csv")), "N,replica,sup_t_msd,w2_final,min_flux,flux_ok_flag");
    assert_eq!(
        header(&s.join("aggregate.csv")),
        "N,eps_hat_median,eps_hat_iqr,prob_empirical,prob_floor"
    );
    let e = run("energy");
    assert_eq!(header(&e.join("energy.csv")), "t,entropy,correction_integral,F,D,residual");
    let f = run("fluxprob");
    assert_eq!(header(&f.join("fluxprob.csv")), "N,replica,min_flux,flux_ok_flag");
    let c = run("coupling");
    assert_eq!(
        header(&c.join("coupling.csv")),
        "N,replica,sup_t_msd,w2_final,min_flux,observable_error"
    );
}

#[test]
fn kinetic_snapshot_stride_thins_rows() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("k");
    let o = vicsek(tmp.path(), CLASSIC, &["kinetic", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    // 30 steps at stride 5: t = 0, 0.05, ..., 0.3
    let diag = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert_eq!(diag.lines().count(), 1 + 7);
    let snap = fs::read_to_string(out.join("snapshot.csv")).unwrap();
    assert_eq!(snap.lines().count(), 1 + 7 * 64);
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let tmp = TempDir::new().unwrap();
    for cmd in ["particles", "kinetic", "sweep"] {
        let a = tmp.path().join(format!("{cmd}-a"));
        let b = tmp.path().join(format!("{cmd}-b"));
        let oa = vicsek(tmp.path(), CLASSIC, &[cmd, "--out", a.to_str().unwrap(), "--threads", "1"]);
        let ob = vicsek(tmp.path(), CLASSIC, &[cmd, "--out", b.to_str().unwrap(), "--threads", "4"]);
        assert!(oa.status.success() && ob.status.success(), "{cmd}");
        let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        for name in names {
            assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{cmd}/{name:?}");
        }
    }
}

#[test]
fn seed_flag_changes_particle_draws() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(vicsek(tmp.path(), CLASSIC, &["particles", "--out", a.to_str().unwrap()]).status.success());
    assert!(vicsek(tmp.path(), CLASSIC, &["particles", "--out", b.to_str().unwrap(), "--seed", "12"])
        .status
        .success());
    assert_ne!(fs::read(a.join("particles.csv")).unwrap(), fs::read(b.join("particles.csv")).unwrap());
}

#[test]
fn alpha_out_of_range_is_a_schema_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = CLASSIC.replace("sigma = 1.0\n", "sigma = 1.0\nalpha = 1.5\n");
    let o = vicsek(tmp.path(), &cfg, &["constants", "--out", "x"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("model.alpha"), "{}", stderr(&o));
}

#[test]
fn duplicate_and_unknown_keys_are_rejected() {
    let tmp = TempDir::new().unwrap();
    let dup = CLASSIC.replace("sigma = 1.0\n", "sigma = 1.0\nsigma = 2.0\n");
    let o = vicsek(tmp.path(), &dup, &["constants", "--out", "x"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("duplicate"), "{}", stderr(&o));
    let unknown = CLASSIC.replace("[kinetic]\n", "[kinetic]\nsteps = 4\n");
    let o = vicsek(tmp.path(), &unknown, &["kinetic", "--out", "x"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("steps"), "{}", stderr(&o));
}

#[test]
fn missing_section_names_it() {
    let tmp = TempDir::new().unwrap();
    let o = vicsek(tmp.path(), "[model]\npreset = \"classic-vicsek\"\n", &["kinetic", "--out", "x"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("kinetic"), "{}", stderr(&o));
}

#[test]
fn singular_flux_exits_nonzero() {
    let tmp = TempDir::new().unwrap();
    // uniform orientations: J = 0 at the start, so J/|J| is undefined for α = 0
    let cfg = format!("{CLASSIC}\n[initial]\norientation = {{ kind = \"uniform\" }}\nspatial = {{ kind = \"point\" }}\n");
    let o = vicsek(tmp.path(), &cfg, &["kinetic", "--out", tmp.path().join("k").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("kinetic-solver: singular flux"), "{}", stderr(&o));
}

#[test]
fn failed_check_exits_with_code_3() {
    let tmp = TempDir::new().unwrap();
    let cfg = CLASSIC.replace("snapshot_stride = 5\n", "snapshot_stride = 5\nenergy_tol = 1e-12\n");
    let out = tmp.path().join("e");
    let o = vicsek(tmp.path(), &cfg, &["energy", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("energy identity residual"), "{}", stderr(&o));
    // tables and manifest are still written for inspection
    assert!(out.join("energy.csv").exists() && out.join("manifest.toml").exists());
}
