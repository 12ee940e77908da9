//! End-to-end runs of the `rough` binary.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rough_core::io::read_path;
use rough_core::lift::{verify_delayed, DelayedLift};

fn rough(dir: &Path, config: Option<&str>, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rough"));
    cmd.args(args).arg("--out").arg(dir.join("out")).env_remove("ROUGH_WORKERS");
    if let Some(text) = config {
        let path = dir.join("run.toml");
        fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().unwrap()
}

fn summary(out: &Output) -> BTreeMap<String, String> {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn stderr_line(out: &Output) -> String {
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(text.lines().count(), 1, "{text}");
    text.trim_end().to_string()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

const MINIMAL: &str = "[driver]\nH = 0.35\nd = 2\nn = 256\nT = 1\nseed = 7\n";

#[test]
fn sample_writes_one_row_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    summary(&rough(dir.path(), Some(MINIMAL), &["sample"]));
    let rows = csv_rows(&dir.path().join("out/sample.csv"));
    assert_eq!(rows[0], ["t", "x1", "x2"]);
    assert_eq!(rows.len(), 1 + 257);
    assert!(rows[1..].iter().all(|r| r.len() == 3));
}

#[test]
fn sample_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    summary(&rough(a.path(), Some(MINIMAL), &["sample"]));
    summary(&rough(b.path(), Some(MINIMAL), &["sample"]));
    let read = |d: &Path| fs::read(d.join("out/sample.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    summary(&rough(b.path(), Some(MINIMAL), &["sample", "--seed", "8"]));
    assert_ne!(read(a.path()), read(b.path()));
}

#[test]
fn out_of_range_hurst_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = rough(dir.path(), Some("[driver]\nH = 0.2\n"), &["sample"]);
    assert_eq!(out.status.code(), Some(2));
    let line = stderr_line(&out);
    assert!(line.starts_with("error=config "), "{line}");
    assert!(line.contains("(1/4, 1)"), "{line}");
}

#[test]
fn malformed_configuration_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    for text in ["[driver]\nhurts = 0.3\n", "[driver]\nn = 100\n", "[driver\n"] {
        let out = rough(dir.path(), Some(text), &["sample"]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        stderr_line(&out);
    }
    let out = Command::new(env!("CARGO_BIN_EXE_rough"))
        .args(["sample", "--out"])
        .arg(dir.path())
        .env("ROUGH_WORKERS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zero_samples_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = rough(dir.path(), Some("[mc-area]\nN = 0\n"), &["mc-area"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_line(&out).starts_with("error=config "));
}

#[test]
fn blow_up_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let config = "[driver]\nd = 1\n[field]\nname = \"polynomial\"\nc2 = 3\n[solve-sde]\ny0 = [3.0]\n";
    let out = rough(dir.path(), Some(config), &["solve-sde"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_line(&out).starts_with("error=numerical "));
}

fn audit_rows(dir: &Path) -> Vec<(String, String, f64)> {
    csv_rows(&dir.join("out/validate.csv"))
        .into_iter()
        .skip(1)
        .map(|r| (r[0].clone(), r[1].clone(), r[4].parse().unwrap()))
        .collect()
}

#[test]
fn validate_passes_fresh_lifts_and_flags_injected_faults() {
    let dir = tempfile::tempdir().unwrap();
    let s = summary(&rough(dir.path(), Some(MINIMAL), &["validate"]));
    assert_eq!(s["pass"], "true");
    assert!(audit_rows(dir.path()).iter().all(|r| r.2 <= 1e-12));

    let s = summary(&rough(dir.path(), Some(MINIMAL), &["validate", "--inject-fault"]));
    assert_eq!(s["pass"], "false");
    assert!(audit_rows(dir.path()).iter().any(|r| r.2 > 1e-6));
}

#[test]
fn delayed_validate_covers_every_identity_and_family() {
    let dir = tempfile::tempdir().unwrap();
    let config = format!("{MINIMAL}delays = [0.125, 0.25]\n");
    summary(&rough(dir.path(), Some(&config), &["sample"]));
    summary(&rough(dir.path(), Some(&config), &["validate"]));
    let rows = audit_rows(dir.path());
    assert!(rows.iter().all(|r| r.2 <= 1e-12));

    let x = read_path(fs::File::open(dir.path().join("out/sample.csv")).unwrap()).unwrap();
    let expected = verify_delayed(&DelayedLift::new(x, &[0.125, 0.25]).unwrap());
    let got: Vec<(&str, &str)> = rows.iter().map(|r| (r.0.as_str(), r.1.as_str())).collect();
    let want: Vec<(&str, &str)> = expected.rows.iter().map(|r| (r.identity.as_str(), r.family.as_str())).collect();
    assert_eq!(got, want);
    for identity in ["delayed-chen-area", "delayed-chen-volume", "shift", "product", "geometric"] {
        assert!(got.iter().any(|r| r.0 == identity), "{identity}");
    }
    // 3 delay slots and 5 area shifts: area Chen 5·3, shift 5·2
    assert_eq!(got.iter().filter(|r| r.0 == "delayed-chen-area").count(), 15);
    assert_eq!(got.iter().filter(|r| r.0 == "shift").count(), 10);
}

#[test]
fn lift_writes_cell_tables() {
    let dir = tempfile::tempdir().unwrap();
    let s = summary(&rough(dir.path(), Some(MINIMAL), &["lift"]));
    assert_eq!(s["files"], "2");
    let area = csv_rows(&dir.path().join("out/lift_area.csv"));
    assert_eq!(area[0], ["cell", "i", "j", "value"]);
    assert_eq!(area.len(), 1 + 256 * 4);
    let volume = csv_rows(&dir.path().join("out/lift_volume.csv"));
    assert_eq!(volume.len(), 1 + 256 * 8);
}

#[test]
fn convergence_reports_exact_and_third_order_ladders() {
    let dir = tempfile::tempdir().unwrap();
    let s = summary(&rough(dir.path(), Some("[field]\nname = \"constant\"\n"), &["convergence"]));
    assert_eq!(s["order"], "exact");

    let s = summary(&rough(dir.path(), Some("[driver]\nd = 1\n"), &["convergence"]));
    let order: f64 = s["order"].parse().unwrap();
    assert!(order >= 2.7, "{order}");
    assert_eq!(csv_rows(&dir.path().join("out/convergence.csv"))[0], ["n", "h", "error"]);
}

#[test]
fn convergence_on_fbm_decreases_with_the_step() {
    let dir = tempfile::tempdir().unwrap();
    let config = "[driver]\nd = 1\nH = 0.35\n[convergence]\nsignal = \"fbm\"\n";
    let s = summary(&rough(dir.path(), Some(config), &["convergence"]));
    assert_eq!(s["monotone"], "true");
}

#[test]
fn delay_solver_writes_history_and_solution() {
    let dir = tempfile::tempdir().unwrap();
    let config = "[driver]\nd = 1\nn = 128\ndelays = [0.25]\n[field]\nname = \"delay-feedback\"\n[solve-dde]\nxi = [0.5]\n";
    let s = summary(&rough(dir.path(), Some(config), &["solve-dde"]));
    assert_eq!(s["history_rows"], "32");
    let rows = csv_rows(&dir.path().join("out/solve_dde.csv"));
    assert_eq!(rows[0], ["t", "y1"]);
    assert_eq!(rows.len(), 1 + 32 + 129);
    assert!(rows[1..=33].iter().all(|r| r[1].parse::<f64>().unwrap() == 0.5));
}

#[test]
fn mc_area_defaults_reproduce_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let s = summary(&rough(dir.path(), None, &["mc-area"]));
    assert_eq!(s["closed_form"].parse::<f64>().unwrap(), 0.5);
    assert!(s["z"].parse::<f64>().unwrap() <= 4.0);
    let rows = csv_rows(&dir.path().join("out/mc_area.csv"));
    assert_eq!(rows[0], ["H", "v1", "v2", "tau", "N", "mean", "stderr", "closed_form", "z", "slope"]);
}

#[test]
fn mc_scaling_slope_and_worker_independence() {
    let dir = tempfile::tempdir().unwrap();
    let config = "[mc-area]\nmode = \"scaling\"\nlevel = 2\nH = 0.5\nv1 = 0.25\nN = 400\n";
    let s = summary(&rough(dir.path(), Some(config), &["mc-area", "--workers", "1"]));
    let slope: f64 = s["slope"].parse().unwrap();
    assert!((slope - 2.0).abs() <= 0.3, "{slope}");
    let one = fs::read(dir.path().join("out/mc_area.csv")).unwrap();
    summary(&rough(dir.path(), Some(config), &["mc-area", "--workers", "3"]));
    assert_eq!(one, fs::read(dir.path().join("out/mc_area.csv")).unwrap());
}
