use std::path::Path;

use uav_core::config::{load_config_with_overrides, Config};
use uav_core::solver::{evaluate_baseline, solve};
use uav_core::{Exec, SolveReport, Termination};

use crate::manifest::{Command, RunManifest};
use crate::output::{self, SweepRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_MAX_ITERS: i32 = 2;

fn exit_code(t: Termination) -> i32 {
    match t {
        Termination::Converged => EXIT_OK,
        Termination::MaxIters => EXIT_MAX_ITERS,
        Termination::Numerical => EXIT_ERROR,
    }
}

fn load(m: &RunManifest, extra: &[String]) -> Result<Config, String> {
    let overrides: Vec<&String> = m.overrides.iter().chain(extra).collect();
    load_config_with_overrides(&m.config, &overrides).map_err(|e| e.to_string())
}

fn summary(label: &str, r: &SolveReport) -> String {
    format!(
        "{label}: tau = {:.6e} bps after {} outer iteration(s), power {:.6} W, {:?} in {:.3} s",
        r.final_tau,
        r.outer_iterations,
        r.total_power(),
        r.termination,
        r.wall_clock.total_s
    )
}

fn emit(m: &RunManifest, dir: &Path, command: &str, r: &SolveReport) -> i32 {
    if let Err(e) = output::write_outputs(dir, command, &m.config.display().to_string(), r) {
        eprintln!("error: writing outputs to {}: {e}", dir.display());
        return EXIT_ERROR;
    }
    if let Some(msg) = &r.message {
        eprintln!("error: {msg}");
    }
    if !m.quiet {
        println!("{}", summary(command, r));
    }
    exit_code(r.termination)
}

/// Runs the alternating optimization and writes its tables.
pub fn run_solve(m: &RunManifest) -> i32 {
    let cfg = match load(m, &[]) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    emit(m, &m.out_dir, "solve", &solve(&cfg))
}

/// Optimal powers on the fixed circular trajectory.
pub fn run_baseline(m: &RunManifest) -> i32 {
    let cfg = match load(m, &[]) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    emit(m, &m.out_dir, "baseline", &evaluate_baseline(&cfg))
}

/// One solve and one baseline per sweep value. Point outputs go to
/// `<out>/<var>_<value>/`; the aggregate table to `<out>/sweep.csv`.
pub fn run_sweep(m: &RunManifest) -> i32 {
    let Some(sweep) = &m.sweep else {
        eprintln!("error: sweep command needs --sweep VAR=v1,v2,...");
        return EXIT_ERROR;
    };
    // Points run concurrently when the base config asks for parallel work.
    let exec = load(m, &[]).map_or(Exec::Sequential, |c| c.solver.exec);
    let rows: Vec<(SweepRow, i32)> = exec.map(&sweep.values, |value| {
        let key = sweep.var.config_key();
        let point_dir = m.out_dir.join(format!("{}_{}", sweep.var, value));
        let cfg = match load(m, &[format!("{key}={value}")]) {
            Ok(c) => c,
            Err(e) => {
                return (
                    SweepRow {
                        value: value.clone(),
                        tau_solve_bps: None,
                        tau_baseline_bps: None,
                        wall_clock_s: None,
                        outer_iters: None,
                        status: format!("error: {e}"),
                    },
                    EXIT_ERROR,
                )
            }
        };
        let r = solve(&cfg);
        let b = evaluate_baseline(&cfg);
        let mut code = exit_code(r.termination).max(exit_code(b.termination));
        let write = output::write_outputs(&point_dir, "solve", &m.config.display().to_string(), &r)
            .and_then(|_| {
                output::write_outputs(&point_dir.join("baseline"), "baseline", &m.config.display().to_string(), &b)
            });
        let status = match (&write, r.termination, &r.message, &b.message) {
            (Err(e), ..) => {
                code = EXIT_ERROR;
                format!("error: writing outputs: {e}")
            }
            (_, _, Some(msg), _) | (_, _, _, Some(msg)) => format!("error: {msg}"),
            (_, Termination::Converged, ..) => "converged".into(),
            (_, Termination::MaxIters, ..) => "max_iters".into(),
            (_, Termination::Numerical, ..) => "error".into(),
        };
        (
            SweepRow {
                value: value.clone(),
                tau_solve_bps: Some(r.final_tau),
                tau_baseline_bps: Some(b.final_tau),
                wall_clock_s: Some(r.wall_clock.total_s),
                outer_iters: Some(r.outer_iterations),
                status,
            },
            code,
        )
    });

    let table: Vec<SweepRow> = rows.iter().map(|(r, _)| r.clone()).collect();
    if let Err(e) = std::fs::create_dir_all(&m.out_dir).and_then(|_| output::write_sweep(&m.out_dir, &table)) {
        eprintln!("error: writing sweep table: {e}");
        return EXIT_ERROR;
    }
    if !m.quiet {
        for row in &table {
            println!(
                "{}={}: solve {:?} baseline {:?} ({})",
                sweep.var, row.value, row.tau_solve_bps, row.tau_baseline_bps, row.status
            );
        }
    }
    rows.iter().map(|(_, c)| *c).max().unwrap_or(EXIT_OK)
}

/// Validates the manifest and dispatches on its command.
pub fn run(m: &RunManifest) -> i32 {
    if let Err(e) = m.validate() {
        eprintln!("error: {e}");
        return EXIT_ERROR;
    }
    match m.command {
        Command::Solve => run_solve(m),
        Command::Baseline => run_baseline(m),
        Command::Sweep => run_sweep(m),
    }
}
