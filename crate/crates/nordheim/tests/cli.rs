//! End-to-end tests of the command-line driver.

use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nordheim"));
    // One worker: deterministic, and honest on single-core runners.
    cmd.env("NORDHEIM_THREADS", "1");
    cmd
}

fn write(dir: &TempDir, name: &str, content: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, content).unwrap();
    path.display().to_string()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const BE_BODY: &str = "
[time]
t_end = 0.01
dt0 = 1e-3

[initial]
kind = bose_einstein
beta = 1.0
alpha = 0.5
";

fn be_config(dir: &TempDir) -> String {
    let series = dir.path().join("series.csv").display().to_string();
    let snapshot = dir.path().join("snap.csv").display().to_string();
    let summary = dir.path().join("summary.json").display().to_string();
    format!(
        "[grid]\nn = 64\neps_max = 2.0\n{BE_BODY}\n[output]\nseries = {series}\nsnapshot = {snapshot}\nsummary = {summary}\n"
    )
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "bad.cfg", "[grid]\nn = 64\nepsmax = 2.0\n");
    let out = bin().args(["simulate", "-c", &path]).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("eps_max"), "suggests the correct key: {}", stderr(&out));
}

#[test]
fn bose_einstein_simulation_completes_with_constant_mass_column() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "be.cfg", &be_config(&dir));
    let out = bin().args(["simulate", "-c", &path]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("status: completed"));

    let series = std::fs::read_to_string(dir.path().join("series.csv")).unwrap();
    let mut lines = series.lines();
    assert_eq!(lines.next().unwrap(), "t,M,E,S,f_sup");
    let masses: Vec<f64> = lines
        .map(|line| line.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(masses.len() > 5);
    let m0 = masses[0];
    for m in &masses {
        assert!((m - m0).abs() <= 1e-10 * m0, "mass column moved: {m} vs {m0}");
    }

    // The artifacts and their plots all exist.
    for name in ["series.csv", "snap.csv", "summary.json", "series.csv.svg", "snap.csv.svg"] {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["status"], "completed");
    assert_eq!(summary["exit_code"], 0);
}

#[test]
fn blowup_simulation_exits_ten_with_t_detect_in_summary() {
    let dir = TempDir::new().unwrap();
    let summary_path = dir.path().join("summary.json").display().to_string();
    let cfg = format!(
        "[grid]\nn = 128\neps_max = 1.0\n\n[time]\nt_end = 0.05\ndt0 = 1e-3\nf_cap = 100.0\n\n\
         [initial]\nkind = blowup\nm = 3.0\ne = 1.0\nrho = 0.1\nbeta = 0.3\n\n\
         [output]\nmoment_convention = plain\nsummary = {summary_path}\n"
    );
    let path = write(&dir, "blow.cfg", &cfg);
    let out = bin().args(["simulate", "-c", &path]).output().unwrap();
    assert_eq!(out.status.code(), Some(10), "{}\n{}", stdout(&out), stderr(&out));
    assert!(stdout(&out).contains("status: blowup_detected"));

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["status"], "blowup_detected");
    assert_eq!(summary["exit_code"], 10);
    let t_detect = summary["t_detect"].as_f64().expect("t_detect is a number");
    assert!(t_detect > 0.0 && t_detect < 0.05);
}

#[test]
fn zero_horizon_yields_a_one_row_series() {
    let dir = TempDir::new().unwrap();
    let series = dir.path().join("series.csv").display().to_string();
    let cfg = format!(
        "[grid]\nn = 64\neps_max = 2.0\n\n[time]\nt_end = 0.0\n\n\
         [initial]\nkind = bose_einstein\nbeta = 1.0\nalpha = 0.5\n\n[output]\nseries = {series}\n"
    );
    let path = write(&dir, "zero.cfg", &cfg);
    let out = bin().args(["simulate", "-c", &path]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("series.csv")).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 2, "header plus exactly one row: {text}");
    assert!(rows[1].starts_with("0.000000000e0,"));
}

#[test]
fn check_equilibrium_passes_on_bose_einstein_data() {
    let dir = TempDir::new().unwrap();
    let path = write(
        &dir,
        "be.cfg",
        &format!("[grid]\nn = 64\neps_max = 2.0\n{BE_BODY}"),
    );
    let out = bin().args(["check-equilibrium", "-c", &path]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("conservative:") && text.contains("collocation:"));
    assert_eq!(text.matches("PASS").count(), 2, "{text}");
}

#[test]
fn check_equilibrium_fails_off_equilibrium() {
    let dir = TempDir::new().unwrap();
    let cfg = format!(
        "[grid]\nn = 64\neps_max = 1.0\n\n[time]\nt_end = 0.0\n\n\
         [initial]\nkind = blowup\nm = 3.0\ne = 1.0\nrho = 0.1\nbeta = 0.3\n\n\
         [output]\nmoment_convention = plain\n"
    );
    let path = write(&dir, "blow.cfg", &cfg);
    let out = bin().args(["check-equilibrium", "-c", &path]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn partition_reports_the_separated_certificate() {
    let dir = TempDir::new().unwrap();
    let atoms = write(&dir, "atoms.csv", "location,mass\n0.9,0.5\n0.05,0.5\n");
    let plot = dir.path().join("atoms.svg").display().to_string();
    let out = bin()
        .args(["partition", "-i", &atoms, "--b", "2", "--delta", "0.4", "--plot", &plot])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["partition"]["case"], "separated");
    let eta = report["partition"]["eta"].as_f64().unwrap();
    assert!((eta - 1.0 / 15.0).abs() < 1e-15, "eta = {eta}");
    assert_eq!(report["verified"], true);
    assert!(dir.path().join("atoms.svg").exists());
}

#[test]
fn fit_exponent_recovers_a_planted_power_law() {
    let dir = TempDir::new().unwrap();
    let n = 257;
    let h = 0.5 / (n - 1) as f64;
    let mut body = String::from("eps,f,g\n");
    for i in 0..n {
        let eps = i as f64 * h;
        let f = if i == 0 { 0.0 } else { 2.0 * eps.powf(-7.0 / 6.0) };
        body.push_str(&format!("{eps:.16e},{f:.16e},0.0\n"));
    }
    let snap = write(&dir, "snap.csv", &body);
    let out = bin()
        .args(["fit-exponent", "-i", &snap, "--lo", "1e-2", "--hi", "4e-1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let exponent = report["exponent"].as_f64().unwrap();
    assert!((exponent - 7.0 / 6.0).abs() < 1e-9, "exponent = {exponent}");
}

#[test]
fn sweep_prints_one_row_per_value() {
    let dir = TempDir::new().unwrap();
    let summary = dir.path().join("sweep.json").display().to_string();
    let cfg = format!(
        "[grid]\nn = 64\neps_max = 1.0\n\n[time]\nt_end = 0.02\ndt0 = 1e-3\nf_cap = 100.0\n\n\
         [initial]\nkind = blowup\nm = 3.0\ne = 1.0\nrho = 0.1\nbeta = 0.3\n\n\
         [output]\nmoment_convention = plain\nsummary = {summary}\n"
    );
    let path = write(&dir, "sweep.cfg", &cfg);
    let out = bin()
        .args(["sweep", "-c", &path, "--param", "rho", "--values", "0.2,0.1,0.05"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "param,value,status,exit_code,steps,t_final,t_detect,f_sup_final");
    assert_eq!(lines.len(), 4, "{text}");
    for (line, value) in lines[1..].iter().zip(["0.2", "0.1", "0.05"]) {
        assert!(line.starts_with(&format!("rho,{value},")), "{line}");
    }
    let rows: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("sweep.json")).unwrap())
            .unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 3);
}

#[test]
fn repeated_single_thread_runs_are_byte_identical() {
    let run_once = |dir: &TempDir| -> (Vec<u8>, Vec<u8>) {
        let path = write(dir, "be.cfg", &be_config(dir));
        let out = bin().args(["simulate", "-c", &path]).output().unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        (
            std::fs::read(dir.path().join("series.csv")).unwrap(),
            std::fs::read(dir.path().join("snap.csv")).unwrap(),
        )
    };
    let first = run_once(&TempDir::new().unwrap());
    let second = run_once(&TempDir::new().unwrap());
    assert_eq!(first.0, second.0, "series differ between runs");
    assert_eq!(first.1, second.1, "snapshots differ between runs");
}

#[test]
fn golden_headers_are_stable() {
    let dir = TempDir::new().unwrap();
    let series = dir.path().join("series.csv").display().to_string();
    let snapshot = dir.path().join("snap.csv").display().to_string();
    let cfg = format!(
        "[grid]\nn = 64\neps_max = 2.0\n\n[time]\nt_end = 0.002\ndt0 = 1e-3\n\n\
         [initial]\nkind = bose_einstein\nbeta = 1.0\nalpha = 0.5\n\n\
         [diagnostics]\nmass_below = 0.25, 0.5\nfit_lo = 0.05\nfit_hi = 0.5\n\n\
         [output]\nseries = {series}\nsnapshot = {snapshot}\n"
    );
    let path = write(&dir, "be.cfg", &cfg);
    let out = bin().args(["simulate", "-c", &path]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let series_text = std::fs::read_to_string(dir.path().join("series.csv")).unwrap();
    assert_eq!(
        series_text.lines().next().unwrap(),
        "t,M,E,S,f_sup,mass_below_0.25,mass_below_0.5,exponent"
    );
    let snap_text = std::fs::read_to_string(dir.path().join("snap.csv")).unwrap();
    assert_eq!(snap_text.lines().next().unwrap(), "eps,f,g");
    // Fixed-width scientific formats: 10 significant digits in series rows,
    // 17 in snapshot rows.
    let series_cell = series_text.lines().nth(1).unwrap().split(',').nth(1).unwrap();
    assert_eq!(series_cell, "1.017129931e1");
    let snap_cell = snap_text.lines().nth(2).unwrap().split(',').next().unwrap();
    assert_eq!(snap_cell, "3.1746031746031744e-2");
}
