//! The `formica` binary and the run-directory layout.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use formica::config::{parse_config, parse_raw, serialize};
use formica::execute::{config_hash, execute, run_dir, MANIFEST};
use formica::presets;

fn formica(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_formica"))
        .args(args)
        .env_remove("FORMICA_OUT")
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn run_path(output: &Output) -> PathBuf {
    PathBuf::from(String::from_utf8_lossy(&output.stdout).trim())
}

fn manifest_value(dir: &Path, key: &str) -> Option<String> {
    let text = fs::read_to_string(dir.join(MANIFEST)).unwrap();
    text.lines().find_map(|l| {
        let (k, v) = l.split_once(" = ")?;
        (k == key).then(|| v.trim_matches('"').to_string())
    })
}

#[test]
fn uniform_profile_is_classified_uniform() {
    let root = tempfile::tempdir().unwrap();
    let cfg = root.path().join("flat.txt");
    fs::write(&cfg, "azimuthal.samples = 500\nazimuthal.t_end = 10\n").unwrap();
    let out = formica(&["azimuthal", "--config", cfg.to_str().unwrap()], root.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = run_path(&out);
    assert_eq!(manifest_value(&dir, "status").as_deref(), Some("completed"));
    assert_eq!(manifest_value(&dir, "classification").as_deref(), Some("uniform"));
    assert!(dir.join("stationary.csv").exists() && dir.join("histogram.csv").exists());
}

#[test]
fn kernel_report_covers_the_default_grid() {
    let root = tempfile::tempdir().unwrap();
    let out = formica(&["kernels"], root.path());
    assert!(out.status.success());
    let csv = fs::read_to_string(run_path(&out).join("kernels.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    let ps: std::collections::BTreeSet<&str> = rows.iter().map(|r| r.split(',').nth(1).unwrap()).collect();
    let ts: std::collections::BTreeSet<&str> = rows.iter().map(|r| r.split(',').nth(2).unwrap()).collect();
    assert!(ps.len() >= 3 && ts.len() >= 4, "{} p values, {} t values", ps.len(), ts.len());
    assert_eq!(rows.len(), 3 * ps.len() * ts.len());
}

#[test]
fn same_config_and_seed_give_identical_snapshots() {
    let root = tempfile::tempdir().unwrap();
    let cfg_text = "mode = particles\nseed = 3\nparticles.n = 64\nparticles.steps = 40\nparticles.schedule = stride\nparticles.schedule_value = 10\n";
    let cfg = parse_config(cfg_text).unwrap();
    let a = execute(&cfg, &root.path().join("a")).unwrap();
    let b = execute(&cfg, &root.path().join("b")).unwrap();
    assert_eq!(a.files, b.files);
    for name in &a.files {
        let x = fs::read(a.dir.join(name)).unwrap();
        let y = fs::read(b.dir.join(name)).unwrap();
        assert!(x == y, "{name} differs");
    }
    assert!(a.files.iter().any(|f| f.starts_with("field/step_")));
}

#[test]
fn seed_flag_overrides_the_config() {
    let root = tempfile::tempdir().unwrap();
    let cfg = root.path().join("c.txt");
    fs::write(&cfg, "seed = 1\nazimuthal.samples = 100\nazimuthal.t_end = 10\n").unwrap();
    let out = formica(&["azimuthal", "--config", cfg.to_str().unwrap(), "--seed", "99"], root.path());
    assert!(out.status.success());
    assert_eq!(manifest_value(&run_path(&out), "seed").as_deref(), Some("99"));
}

#[test]
fn manifest_hash_matches_recorded_config() {
    let root = tempfile::tempdir().unwrap();
    let out = formica(&["azimuthal", "--preset", "azimuthal_gradient"], root.path());
    assert!(out.status.success());
    let dir = run_path(&out);
    let text = fs::read_to_string(dir.join("config.txt")).unwrap();
    let cfg = parse_config(&text).unwrap();
    assert_eq!(serialize(&cfg), text);
    assert_eq!(manifest_value(&dir, "config_hash").unwrap(), config_hash(&cfg));
    assert_eq!(run_dir(root.path(), &cfg), dir);
    for f in manifest_value(&dir, "files").unwrap().split(',') {
        assert!(dir.join(f).exists(), "{f} listed but missing");
    }
}

#[test]
fn config_errors_exit_2_and_list_every_violation() {
    let root = tempfile::tempdir().unwrap();
    let cfg = root.path().join("bad.txt");
    fs::write(&cfg, "fd.dt = -1\nfd.n_x = 2\nfd.bogus = 1\n").unwrap();
    let out = formica(&["fd", "--config", cfg.to_str().unwrap()], root.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.lines().count() >= 3, "{stderr}");
    assert!(stderr.contains("fd.bogus"), "{stderr}");
}

#[test]
fn mode_conflict_with_preset_is_a_config_error() {
    let root = tempfile::tempdir().unwrap();
    let out = formica(&["fd", "--preset", "kernels_line"], root.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_config_file_is_an_io_error() {
    let root = tempfile::tempdir().unwrap();
    let out = formica(&["fd", "--config", "/nonexistent/formica.txt"], root.path());
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn negative_density_abort_exits_3_with_failed_manifest() {
    let root = tempfile::tempdir().unwrap();
    let cfg = root.path().join("steep.txt");
    fs::write(
        &cfg,
        "model.chi = 20\nmodel.sigma_c = 0.01\nmodel.tau = 0.1\nmodel.sigma_x = 0.01\nfd.n_x = 32\nfd.n_theta = 16\nfd.dt = 0.05\nfd.t_max = 20\nfd.c_amplitude = 0.1\n",
    )
    .unwrap();
    let out = formica(&["fd", "--config", cfg.to_str().unwrap()], root.path());
    assert_eq!(out.status.code(), Some(3));
    let dir = fs::read_dir(root.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.is_dir())
        .unwrap();
    assert_eq!(manifest_value(&dir, "status").as_deref(), Some("failed"));
    assert!(manifest_value(&dir, "reason").unwrap().contains("negative"));
    assert!(dir.join("diagnostics.csv").exists());
}

#[test]
fn sweep_runs_each_config() {
    let root = tempfile::tempdir().unwrap();
    let mut args = vec!["azimuthal".to_string(), "--jobs".into(), "2".into()];
    for (i, p1) in ["0", "1", "0.5"].iter().enumerate() {
        let path = root.path().join(format!("c{i}.txt"));
        fs::write(&path, format!("azimuthal.p1 = {p1}\nazimuthal.samples = 50\nazimuthal.t_end = 10\n")).unwrap();
        args.push("--config".into());
        args.push(path.display().to_string());
    }
    let argv: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = formica(&argv, root.path());
    assert!(out.status.success());
    let dirs: Vec<PathBuf> = String::from_utf8_lossy(&out.stdout).lines().map(PathBuf::from).collect();
    assert_eq!(dirs.len(), 3);
    assert!(dirs.iter().all(|d| d.join(MANIFEST).exists()));
}

#[test]
fn output_env_overrides_out_flag() {
    let root = tempfile::tempdir().unwrap();
    let env_root = root.path().join("env");
    let out = Command::new(env!("CARGO_BIN_EXE_formica"))
        .args(["kernels", "--out"])
        .arg(root.path().join("flag"))
        .env("FORMICA_OUT", &env_root)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(run_path(&out).starts_with(&env_root));
}

#[test]
fn every_preset_round_trips_through_serialization() {
    for preset in presets::catalog() {
        let cfg = parse_config(&format!("preset = \"{}\"\n", preset.name)).unwrap();
        let text = serialize(&cfg);
        let again = parse_config(&text).unwrap();
        assert_eq!(again, cfg, "{}", preset.name);
        assert_eq!(parse_raw(&serialize(&again)).unwrap(), parse_raw(&text).unwrap());
    }
}
