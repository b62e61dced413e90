use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use uav_cli::{run, Command, RunManifest, Sweep};

/// Joint transmit-power and trajectory design for a UAV serving ground users.
///
/// Exit status: 0 converged, 2 iteration cap reached, 1 error.
#[derive(Debug, Parser)]
#[command(name = "uav-plan", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Alternate power and trajectory updates until the max-min throughput settles.
    Solve(Common),
    /// Optimal powers on the fixed circular trajectory only.
    Baseline(Common),
    /// Run solve and baseline for each value of one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// VAR=v1,v2,... with VAR one of num_slots, p_max, v_max.
        #[arg(long, value_name = "VAR=v1,v2,...")]
        sweep: Sweep,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario config (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Config override, e.g. rho2=2.0 (repeatable).
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, value_name = "N")]
    max_outer: Option<usize>,
    #[arg(long, value_name = "N")]
    max_admm: Option<usize>,
    #[arg(long)]
    quiet: bool,
}

fn manifest(c: Common, command: Command, sweep: Option<Sweep>) -> RunManifest {
    let mut overrides = c.overrides;
    if let Some(n) = c.max_outer {
        overrides.push(format!("max_outer_iters={n}"));
    }
    if let Some(n) = c.max_admm {
        overrides.push(format!("max_admm_iters={n}"));
    }
    RunManifest {
        config: c.config,
        out_dir: c.out,
        command,
        sweep,
        overrides,
        quiet: c.quiet,
    }
}

fn main() -> ExitCode {
    let m = match Cli::parse().command {
        Cmd::Solve(c) => manifest(c, Command::Solve, None),
        Cmd::Baseline(c) => manifest(c, Command::Baseline, None),
        Cmd::Sweep { common, sweep } => manifest(common, Command::Sweep, Some(sweep)),
    };
    ExitCode::from(run(&m) as u8)
}
