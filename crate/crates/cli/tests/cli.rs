use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use spde_cli::sha256_hex;
use spde_core::engine::read_snapshots;

fn spde(args: &[&str], dir: &Path, config: &str) -> Output {
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_spde"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .env_remove("SPDE_OUT")
        .current_dir(dir)
        .output()
        .unwrap()
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

fn digests(out: &Path) -> Vec<(String, String)> {
    manifest(out)["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| (f["path"].as_str().unwrap().to_string(), f["sha256"].as_str().unwrap().to_string()))
        .collect()
}

const ZERO: &str = "\
[model]
kind = zero
[initial]
kind = mode
mode = 1, 2
amplitude = 1.5
[integrator]
T = 0.05
[study]
deltas = 0.01
[simulate]
level = 4
stride = 5
";

#[test]
fn simulate_zero_pair_keeps_every_norm_constant() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("z");
    let o = spde(&["simulate", "--out", out.to_str().unwrap()], dir.path(), ZERO);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let csv = fs::read_to_string(out.join("simulate_norms.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,normU,normH,normV,uh,hv,hit"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 51);
    for r in &rows {
        assert_eq!(r[1..4], rows[0][1..4]);
        assert_eq!(r[6], 0.0);
    }
    // mode (1,2): w_H = 6
    assert!((rows[0][1] - 1.5).abs() < 1e-14);
    assert!((rows[0][2] - 1.5 * 6f64.sqrt()).abs() < 1e-12);

    let snap = read_snapshots(fs::File::open(out.join("simulate.snap")).unwrap()).unwrap();
    assert_eq!(snap.frames.len(), 11);
    assert!(snap.frames.iter().all(|(_, f)| *f == snap.frames[0].1));

    for (path, digest) in digests(&out) {
        assert_eq!(sha256_hex(&fs::read(out.join(&path)).unwrap()), digest, "{path}");
    }
    assert_eq!(manifest(&out)["pass"], Value::Bool(true));
}

#[test]
fn energy_check_on_heat_reports_a_ratio_near_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "\
[model]
kind = heat
nu = 0.5
noise_modes = 0
[initial]
kind = mode
mode = 1, 1
[spaces]
levels = 2
[ensemble]
paths = 2
";
    let o = spde(&["energy-check", "--out", "e"], dir.path(), cfg);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("e/energy-check.json")).unwrap()).unwrap();
    let ratio = report["estimate"].as_f64().unwrap();
    assert!((ratio - 2.0).abs() < 0.05, "ratio {ratio}");
}

const SALT_CAUCHY: &str = "\
[integrator]
T = 0.1
[study]
deltas = 0.02, 0.01
cauchy_levels = 2, 4
[ensemble]
paths = 30
";

#[test]
fn cauchy_on_salt_decreases_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = spde(&["cauchy", "--out", "c"], dir.path(), SALT_CAUCHY);
    assert!(o.status.success(), "{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("c/cauchy.csv")).unwrap();
    let estimates: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(4).unwrap().parse().unwrap()).collect();
    assert_eq!(estimates.len(), 2);
    assert!(estimates[1] < estimates[0], "{estimates:?}");
}

#[test]
fn failing_study_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // factor 1 compares each level with itself, so nothing decreases
    let cfg = SALT_CAUCHY.replace("cauchy_levels", "cauchy_factors = 1\ncauchy_levels").replace("paths = 30", "paths = 4");
    let o = spde(&["cauchy", "--out", "f"], dir.path(), &cfg);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(manifest(&dir.path().join("f"))["pass"], Value::Bool(false));
}

#[test]
fn engine_errors_land_in_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    // strat-ito-check needs the salt kind
    let o = spde(&["strat-ito-check", "--out", "s"], dir.path(), "[model]\nkind = heat\nnoise_modes = 0\n");
    assert_eq!(o.status.code(), Some(1));
    let m = manifest(&dir.path().join("s"));
    assert!(m["error"].as_str().unwrap().contains("salt-ns"), "{m}");
    assert!(m["files"].as_array().unwrap().is_empty());
}

#[test]
fn config_errors_name_key_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = spde(&["moments"], dir.path(), "[thresholds]\n\nM = 0.5\n");
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3") && err.contains("thresholds.M") && err.contains("M > 1"), "{err}");

    let o = spde(&["moments"], dir.path(), "[integrator]\ndt = 0.3\nT = 1.0\n");
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("does not divide"));

    let o = spde(&["plot"], dir.path(), "");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[integrator]\nT = 0.02\n[study]\ndeltas = 0.01\n[simulate]\nlevel = 4\nstride = 1\n";
    let run = |name: &str, seed: &str| {
        let o = spde(&["simulate", "--seed", seed, "--out", name], dir.path(), cfg);
        assert!(o.status.success());
        digests(&dir.path().join(name))
    };
    let a = run("a", "7");
    assert_eq!(a, run("b", "7"));
    assert_ne!(a, run("c", "8"));
}

#[test]
fn output_directory_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{ZERO}[output]\ndir = from-config\n");
    let cfg_path = dir.path().join("run.cfg");
    fs::write(&cfg_path, &cfg).unwrap();
    let base = || {
        let mut c = Command::new(env!("CARGO_BIN_EXE_spde"));
        c.args(["simulate", "--config"]).arg(&cfg_path).current_dir(dir.path()).env_remove("SPDE_OUT");
        c
    };
    let ok = |c: &mut Command| c.output().unwrap().status.success();
    assert!(ok(&mut base()));
    assert!(dir.path().join("from-config/manifest.json").exists());
    assert!(ok(base().env("SPDE_OUT", "from-env")));
    assert!(dir.path().join("from-env/manifest.json").exists());
    assert!(ok(base().env("SPDE_OUT", "from-env-2").args(["--out", "from-flag"])));
    assert!(dir.path().join("from-flag/manifest.json").exists());
    assert!(!dir.path().join("from-env-2").exists());
}
