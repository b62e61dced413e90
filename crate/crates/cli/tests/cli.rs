use std::path::{Path, PathBuf};
use std::process::Command as Process;

use uav_cli::output::{
    read_table, ConvergenceRow, RateRow, SweepRow, TrajectoryRow, CONVERGENCE_FILE, RATES_FILE,
    REPORT_FILE, SWEEP_FILE, TRAJECTORY_FILE,
};
use uav_cli::{run, run_baseline, run_solve, Command, RunManifest, EXIT_ERROR, EXIT_MAX_ITERS, EXIT_OK};
use uav_core::scenario::ScenarioParams;
use uav_core::{Scenario, Trajectory};

fn config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/canonical.toml")
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(dir.join(REPORT_FILE)).unwrap()).unwrap()
}

#[test]
fn solve_writes_consistent_tables() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_solve(&RunManifest::new(config(), dir.path(), Command::Solve)), EXIT_OK);
    let json = report(dir.path());
    assert_eq!(json["command"], "solve");
    assert_eq!(json["termination"], "converged");

    let traj: Vec<TrajectoryRow> = read_table(&dir.path().join(TRAJECTORY_FILE)).unwrap();
    let s = Scenario::new(ScenarioParams::canonical(traj.len())).unwrap();
    assert_eq!(traj.len(), 60);
    let q = Trajectory::new(traj.iter().map(|r| [r.x_m, r.y_m]).collect());
    assert!(q.max_hop() <= s.s_max());
    // Floats survive the CSV round trip bit for bit.
    let waypoints = &json["final_trajectory"]["waypoints"];
    assert_eq!(waypoints[7][0].as_f64().unwrap(), traj[7].x_m);

    let rates: Vec<RateRow> = read_table(&dir.path().join(RATES_FILE)).unwrap();
    assert_eq!(rates.len(), 60 * 6);
    let total: f64 = rates.iter().map(|r| r.power_w).sum();
    assert!(rates.iter().all(|r| r.power_w >= 0.0 && r.rate_bps >= 0.0));
    assert!(total <= s.p_max() * (1.0 + 1e-9));

    let conv: Vec<ConvergenceRow> = read_table(&dir.path().join(CONVERGENCE_FILE)).unwrap();
    assert_eq!(conv.len(), json["outer_iterations"].as_u64().unwrap() as usize);
    assert_eq!(conv.last().unwrap().tau_bps, json["final_tau"].as_f64().unwrap());
}

#[test]
fn overrides_reach_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = RunManifest::new(config(), dir.path(), Command::Solve);
    m.overrides = vec!["rho2=2.0".into(), "num_slots=24".into()];
    assert_eq!(run_solve(&m), EXIT_OK);
    let json = report(dir.path());
    assert_eq!(json["solver"]["rho2"], 2.0);
    assert_eq!(json["scenario"]["params"]["num_slots"], 24);
}

#[test]
fn missing_config_fails_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let m = RunManifest::new(dir.path().join("nope.toml"), dir.path().join("out"), Command::Solve);
    assert_eq!(run(&m), EXIT_ERROR);
    assert!(!dir.path().join("out").join(REPORT_FILE).exists());
}

#[test]
fn iteration_cap_gives_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = RunManifest::new(config(), dir.path(), Command::Solve);
    m.overrides = vec!["max_outer_iters=2".into()];
    assert_eq!(run_solve(&m), EXIT_MAX_ITERS);
    assert_eq!(report(dir.path())["termination"], "max_iters");
}

#[test]
fn baseline_reports_one_iteration() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_baseline(&RunManifest::new(config(), dir.path(), Command::Baseline)), EXIT_OK);
    let json = report(dir.path());
    assert_eq!(json["command"], "baseline");
    assert_eq!(json["operator_factorizations"], 0);
}

#[test]
fn sweep_records_failing_points() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = RunManifest::new(config(), dir.path(), Command::Sweep);
    m.sweep = Some("p_max=-1,0.25".parse().unwrap());
    assert_eq!(run(&m), EXIT_ERROR);
    let rows: Vec<SweepRow> = read_table(&dir.path().join(SWEEP_FILE)).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].status.starts_with("error") && rows[0].tau_solve_bps.is_none());
    assert_eq!(rows[1].status, "converged");
    assert!(rows[1].tau_solve_bps.unwrap() >= rows[1].tau_baseline_bps.unwrap());
    assert!(dir.path().join("p_max_0.25").join(TRAJECTORY_FILE).exists());
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_uav-plan");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("capped");
    let status = Process::new(bin)
        .args(["solve", "--quiet", "--max-outer", "1", "--config"])
        .arg(config())
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(EXIT_MAX_ITERS));
    assert!(out.join(CONVERGENCE_FILE).exists());

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "num_slots = 10\nusers = [[0, 0]]\nrho3 = 1\n").unwrap();
    let o = Process::new(bin)
        .args(["solve", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path().join("x"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(EXIT_ERROR));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rho3"));
}
