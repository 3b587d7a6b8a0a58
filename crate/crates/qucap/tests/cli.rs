use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use qucap::{run_with_threads, Mode, RunConfig};

fn qucap(mode: &str, config: &str, extra: &[&str]) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_qucap"))
        .args([mode, "--config", "-"])
        .args(extra)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .env_clear()
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(config.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

/// Parses CSV output into (header, numeric rows); non-numeric cells become NaN.
fn table(out: &Output) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader.records().map(|r| r.unwrap().iter().map(|c| c.parse().unwrap_or(f64::NAN)).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<f64>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i]).collect()
}

#[test]
fn analytic_grid_hits_the_first_peak() {
    let config = format!(r#"{{"omega0": 8, "omega": 3, "t_final": {}, "points": 64}}"#, PI / 5.0);
    let out = qucap("analytic", &config, &[]);
    assert_eq!(code(&out), 0);
    let (header, rows) = table(&out);
    assert_eq!(header, qucap::commands::ANALYTIC_COLUMNS);
    assert_eq!(rows.len(), 64);
    let row = &rows[32];
    assert!((row[0] - PI / 10.0).abs() < 1e-15);
    assert!((row[2] - 2.88).abs() <= 4.0 * f64::EPSILON * 2.88);
}

#[test]
fn analytic_trivial_cases() {
    let out = qucap("analytic", r#"{"omega0": 8, "omega": 0, "t_final": 2, "points": 20}"#, &[]);
    let (header, rows) = table(&out);
    assert!(column(&header, &rows, "energy").iter().all(|&e| e == 0.0));

    let out = qucap("analytic", r#"{"omega0": 8, "omega": 3, "t_final": 2, "points": 20}"#, &[]);
    let (header, rows) = table(&out);
    assert_eq!(column(&header, &rows, "energy"), column(&header, &rows, "damped_energy"));
}

#[test]
fn analytic_rejects_piecewise_drive() {
    let out = qucap("analytic", r#"{"omega0": 8, "drive": [{"t_start": 0, "amplitude": 3}], "t_final": 1}"#, &[]);
    assert_eq!(code(&out), 2);
    assert!(out.stdout.is_empty());
}

#[test]
fn evolve_examples() {
    let config = format!(r#"{{"omega0": 8, "omega": 3, "t_final": {}}}"#, PI / 10.0);
    let out = qucap("evolve", &config, &[]);
    assert_eq!(code(&out), 0);
    let (header, rows) = table(&out);
    assert_eq!(header, qucap::commands::EVOLVE_COLUMNS);
    let last = rows.last().unwrap();
    assert!((last[0] - PI / 10.0).abs() < 1e-15);
    assert!((last[1] - 0.36).abs() < 1e-7);

    let out = qucap("evolve", r#"{"omega0": 0, "omega": 0, "kappa": 2, "t_final": 1, "initial": "excited"}"#, &[]);
    let (_, rows) = table(&out);
    assert!((rows.last().unwrap()[1] - (-2.0f64).exp()).abs() < 1e-8);

    let out = qucap("evolve", r#"{"omega0": 5, "omega": 0, "t_final": 3}"#, &[]);
    let (_, rows) = table(&out);
    assert!(rows.iter().all(|r| r[1] == 0.0));
}

#[test]
fn evolve_column_selection() {
    let out = qucap("evolve", r#"{"omega0": 1, "omega": 1, "t_final": 1, "columns": ["coherence_mag", "t"]}"#, &[]);
    assert_eq!(code(&out), 0);
    let (header, _) = table(&out);
    assert_eq!(header, ["coherence_mag", "t"]);
    let out = qucap("evolve", r#"{"omega0": 1, "omega": 1, "t_final": 1, "columns": ["capacitance"]}"#, &[]);
    assert_eq!(code(&out), 2);
}

#[test]
fn evolve_json_writes_data_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.json");
    let config = r#"{"omega0": 8, "omega": 3, "gamma": 0.1, "t_final": 1, "format": "json"}"#;
    let out = qucap("evolve", config, &["--output", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let data: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(data["meta"]["params"]["gamma"], 0.1);
    assert!(data["rows"].as_array().unwrap().len() > 10);
    let sidecar: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("traj.meta.json")).unwrap()).unwrap();
    assert_eq!(sidecar["version"], env!("CARGO_PKG_VERSION"));
    assert!(sidecar["generated_unix_seconds"].as_u64().unwrap() > 0);
    assert_eq!(sidecar["run"]["solver"]["abs_tol"], 1e-10);
}

#[test]
fn integration_failure_exits_3_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let config =
        r#"{"omega0": 8, "omega": 3, "t_final": 3, "abs_tol": 1e-4, "rel_tol": 1e-2, "max_step": 1, "sample_dt": 1.5}"#;
    let out = qucap("evolve", config, &["--output", path.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("at t = "), "{stderr}");
    assert!(!path.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn sweep_max_power_column() {
    let out = qucap("sweep", r#"{"omega0": 8, "omega": [3, 1, 2]}"#, &[]);
    assert_eq!(code(&out), 0);
    let (header, rows) = table(&out);
    assert_eq!(header, qucap::commands::SWEEP_COLUMNS);
    assert_eq!(column(&header, &rows, "omega"), [1.0, 2.0, 3.0]);
    let expected = [8.0 / 17f64.sqrt(), 32.0 / 20f64.sqrt(), 14.4];
    for (got, want) in column(&header, &rows, "max_power").iter().zip(expected) {
        assert!((got - want).abs() <= 1e-14 * want);
    }
    assert!(column(&header, &rows, "peak_deviation").iter().all(|&d| d < 1e-9));
}

#[test]
fn sweep_partial_failure_exits_4() {
    let config =
        r#"{"omega0": 8, "omega": [0, 3], "abs_tol": 1e-4, "rel_tol": 1e-2, "max_step": 10, "sample_dt": 1.5}"#;
    let out = qucap("sweep", config, &[]);
    assert_eq!(code(&out), 4);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].ends_with(','), "zero drive needs no integration: {}", lines[1]);
    assert!(lines[2].contains("integrity"), "{}", lines[2]);
}

#[test]
fn single_tuple_sweep_is_a_config_error() {
    assert_eq!(code(&qucap("sweep", r#"{"omega0": 8, "omega": 3}"#, &[])), 2);
}

#[test]
fn sweep_output_is_independent_of_thread_count() {
    let config =
        RunConfig::from_json(r#"{"omega0": [1, 8], "omega": [0.5, 1, 3], "gamma": [0, 0.05]}"#, Mode::Sweep, None)
            .unwrap();
    let one = run_with_threads(&config, 1).unwrap();
    let many = run_with_threads(&config, 4).unwrap();
    assert_eq!(one.data, many.data);
}

#[test]
fn verify_default_grid_passes() {
    let out = qucap("verify", "{}", &[]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1);
    assert!(stderr.starts_with("verify: 53 cases, 53 passed"), "{stderr}");
}

#[test]
fn verify_sabotage_fails_population() {
    let config = r#"{"abs_tol": 1e-4, "rel_tol": 1e-2, "max_step": 10, "samples_per_period": 8, "format": "json"}"#;
    let out = qucap("verify", config, &[]);
    assert_eq!(code(&out), 5);
    let reports: Vec<serde_json::Value> =
        String::from_utf8(out.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(reports.len(), 53);
    assert!(reports.iter().any(|r| r["quantity"] == "excited_population" && r["passed"] == false));
}

#[test]
fn verify_trivial_grid_passes() {
    let out = qucap("verify", r#"{"omega0": 0, "omega": 0, "gamma": 0, "kappa": 0}"#, &[]);
    assert_eq!(code(&out), 0);
    assert_eq!(table(&out).1.len(), 2);
}

#[test]
fn config_errors_exit_2() {
    assert_eq!(code(&qucap("analytic", r#"{"omega0": 8, "omgea": 3, "t_final": 1}"#, &[])), 2);
    assert_eq!(code(&qucap("analytic", "not json", &[])), 2);
    assert_eq!(code(&qucap("evolve", r#"{"omega0": -1, "omega": 3, "t_final": 1}"#, &[])), 2);
    assert_eq!(code(&qucap("bogus", "{}", &[])), 2);

    let out = Command::new(env!("CARGO_BIN_EXE_qucap"))
        .args(["analytic", "--config", "/nonexistent/config.json"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn config_can_be_read_from_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(&config, r#"{"omega0": 8, "omega": 3, "t_final": 1, "points": 4, "output": "out.csv"}"#).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_qucap"))
        .current_dir(dir.path())
        .args(["analytic", "--config", config.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let written = std::fs::read_to_string(Path::new(dir.path()).join("out.csv")).unwrap();
    assert_eq!(written.lines().count(), 5);
}
