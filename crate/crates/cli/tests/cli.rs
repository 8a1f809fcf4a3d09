use std::fs;
use std::process::{Command, Output};

const HEADER: &str =
    "level,h,tau,q,flux,error_l2,residual_l2,recon_gap,estimator_bound,eoc_error,eoc_residual,in_box";

fn hyperest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyperest"))
        .args(args)
        .env("HYPEREST_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn cfl_violation_is_rejected_before_running() {
    let out = hyperest(&["advection", "--q", "1", "--cfl", "0.05"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("CFL"));
}

#[test]
fn unsupported_reconstruction_is_a_config_error() {
    let out = hyperest(&["advection", "--recon", "H(0,2,0)", "--levels", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn advection_csv_round_trips_through_eoc() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("run.csv");
    let second = dir.path().join("eoc.csv");
    let out = hyperest(&[
        "advection",
        "--q",
        "1",
        "--levels",
        "2",
        "--out",
        first.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let text = fs::read_to_string(&first).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(HEADER));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][4], "richtmyer_visc");
    assert_eq!(rows[0][9], "");
    let eoc: f64 = rows[1][9].parse().unwrap();
    assert!((1.5..2.5).contains(&eoc), "error EOC {eoc}");
    // Floats carry 17 significant digits.
    assert_eq!(rows[1][5].split('e').next().unwrap().len(), 18);

    let out = hyperest(&[
        "eoc",
        first.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read_to_string(&second).unwrap(), text);
}

#[test]
fn dumped_config_is_accepted_back() {
    let out = hyperest(&["advection", "--q", "2", "--levels", "1", "--dump-config"]);
    assert_eq!(out.status.code(), Some(0));
    let toml = stdout(&out);
    assert!(toml.contains("q = 2"));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    fs::write(&path, &toml).unwrap();
    let again = hyperest(&[
        "advection",
        "--config",
        path.to_str().unwrap(),
        "--dump-config",
    ]);
    assert_eq!(stdout(&again), toml);
}

#[test]
fn ode_study_reports_fourth_order() {
    let out = hyperest(&["ode", "--stepper", "rk4", "--levels", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let last: Vec<&str> = text.lines().last().unwrap().split(',').collect();
    let eoc: f64 = last[7].parse().unwrap();
    assert!((eoc - 4.0).abs() < 0.3, "residual EOC {eoc}");
    let error: f64 = last[4].parse().unwrap();
    let bound: f64 = last[5].parse().unwrap();
    assert!(error <= bound);
}

#[test]
fn unknown_flux_is_a_usage_error() {
    let out = hyperest(&["advection", "--flux", "godunov"]);
    assert_eq!(out.status.code(), Some(2));
}
