//! Library side of the `uav-plan` command: run manifests, output tables and
//! the solve / baseline / sweep drivers.

pub mod manifest;
pub mod output;
pub mod run;

pub use manifest::{Command, ManifestError, RunManifest, Sweep, SweepVar};
pub use run::{run, run_baseline, run_solve, run_sweep, EXIT_ERROR, EXIT_MAX_ITERS, EXIT_OK};
