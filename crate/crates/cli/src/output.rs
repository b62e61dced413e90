//! Plot-ready CSV tables and the JSON report.
//!
//! Each CSV starts with one `#` comment line describing columns and units,
//! followed by a header row. Floats are written in shortest round-trip form,
//! so reading a table back reproduces the in-memory values exactly.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use uav_core::SolveReport;

pub const REPORT_FILE: &str = "report.json";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const RATES_FILE: &str = "rates.csv";
pub const CONVERGENCE_FILE: &str = "convergence.csv";
pub const SWEEP_FILE: &str = "sweep.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub slot: usize,
    pub x_m: f64,
    pub y_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub slot: usize,
    pub user: usize,
    pub rate_bps: f64,
    pub power_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub outer_iter: usize,
    pub tau_bps: f64,
    pub power_w: f64,
    pub admm_iters: usize,
    pub admm_final_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: String,
    pub tau_solve_bps: Option<f64>,
    pub tau_baseline_bps: Option<f64>,
    pub wall_clock_s: Option<f64>,
    pub outer_iters: Option<usize>,
    pub status: String,
}

const TRAJECTORY_UNITS: &str = "# slot: 1-based slot index; x_m, y_m: horizontal UAV position [m]";
const RATES_UNITS: &str =
    "# slot, user: 1-based indices; rate_bps: instantaneous rate [bit/s]; power_w: transmit power [W]";
const CONVERGENCE_UNITS: &str = "# outer_iter: 1-based; tau_bps: max-min average throughput [bit/s]; \
power_w: power the iteration's allocation needs on its updated trajectory [W]; \
admm_iters: trajectory ADMM iterations; admm_final_residual: max(primal, dual) residual [m]";
const SWEEP_UNITS: &str = "# value: sweep point; tau_*_bps: max-min average throughput [bit/s]; \
wall_clock_s: solve time [s]; outer_iters: alternating iterations; status: converged | max_iters | error text";

pub fn trajectory_rows(r: &SolveReport) -> Vec<TrajectoryRow> {
    r.final_trajectory
        .waypoints
        .iter()
        .enumerate()
        .map(|(i, p)| TrajectoryRow {
            slot: i + 1,
            x_m: p[0],
            y_m: p[1],
        })
        .collect()
}

pub fn rate_rows(r: &SolveReport) -> Vec<RateRow> {
    let rates = r.final_rates();
    let n = r.final_trajectory.len();
    let mut rows = Vec::with_capacity(n * rates.len());
    for slot in 0..n {
        for (user, (rk, pk)) in rates.iter().zip(&r.final_power).enumerate() {
            rows.push(RateRow {
                slot: slot + 1,
                user: user + 1,
                rate_bps: rk[slot],
                power_w: pk[slot],
            });
        }
    }
    rows
}

pub fn convergence_rows(r: &SolveReport) -> Vec<ConvergenceRow> {
    r.tau_trace
        .iter()
        .enumerate()
        .map(|(i, tau)| {
            let admm = r.admm_summaries.get(i);
            ConvergenceRow {
                outer_iter: i + 1,
                tau_bps: *tau,
                power_w: r.power_trace.get(i).copied().unwrap_or(f64::NAN),
                admm_iters: admm.map_or(0, |a| a.iterations),
                admm_final_residual: admm
                    .map_or(0.0, |a| a.final_primal_residual.max(a.final_dual_residual)),
            }
        })
        .collect()
}

/// Writes `contents` next to `path` and renames it into place.
fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(tmp, path)
}

pub fn write_table<T: Serialize>(path: &Path, units: &str, rows: &[T]) -> io::Result<()> {
    let mut buf = Vec::new();
    writeln!(buf, "{units}")?;
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for row in rows {
            w.serialize(row).map_err(io::Error::other)?;
        }
        w.flush()?;
    }
    write_atomic(path, &buf)
}

pub fn read_table<T: DeserializeOwned>(path: &Path) -> io::Result<Vec<T>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(io::Error::other)?;
    r.deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(io::Error::other)
}

#[derive(Serialize)]
struct ReportFile<'a> {
    command: &'a str,
    config_path: &'a str,
    #[serde(flatten)]
    report: &'a SolveReport,
}

/// Writes `report.json`, `trajectory.csv`, `rates.csv` and `convergence.csv`.
pub fn write_outputs(dir: &Path, command: &str, config_path: &str, r: &SolveReport) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let json = serde_json::to_vec_pretty(&ReportFile {
        command,
        config_path,
        report: r,
    })
    .map_err(io::Error::other)?;
    write_atomic(&dir.join(REPORT_FILE), &json)?;
    write_table(&dir.join(TRAJECTORY_FILE), TRAJECTORY_UNITS, &trajectory_rows(r))?;
    write_table(&dir.join(RATES_FILE), RATES_UNITS, &rate_rows(r))?;
    write_table(&dir.join(CONVERGENCE_FILE), CONVERGENCE_UNITS, &convergence_rows(r))?;
    Ok(())
}

pub fn write_sweep(dir: &Path, rows: &[SweepRow]) -> io::Result<()> {
    write_table(&dir.join(SWEEP_FILE), SWEEP_UNITS, rows)
}
