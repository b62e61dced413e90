//! Joint transmit-power and periodic-trajectory design for a UAV serving
//! ground users over FDMA, maximizing the minimum average throughput.
//!
//! The design variables are the trajectory `q[n]` and the received SNRs
//! `β[k][n] = p[k][n] h[k][n]`. With `q` fixed, the max-min problem over `β`
//! is solved by per-user water-filling plus budget rescaling ([`power`]).
//! With `β` fixed, the best trajectory minimizes a weighted sum of squared
//! distances under a per-slot hop limit, solved by consensus ADMM
//! ([`trajectory`]). [`solver`] alternates the two.

pub mod config;
pub mod error;
pub mod exec;
pub mod geom;
pub mod power;
pub mod scenario;
pub mod solver;
pub mod trajectory;

pub use config::{load_config, load_config_with_overrides, load_scenario, Config, SolverConfig};
pub use error::{Error, Result};
pub use exec::Exec;
pub use geom::Point;
pub use power::{
    power_min, scale_to_budget, solve_subp1, waterfill_user, BetaAllocation, PowerSolution,
    WaterfillResult,
};
pub use scenario::{
    channel_gains, min_avg_throughput, power_used, rates, GainMatrix, Scenario, ScenarioParams,
    Trajectory,
};
pub use solver::{
    evaluate_baseline, initial_trajectory, solve, SolveReport, Termination,
};
pub use trajectory::{build_operator, solve_subp2, AdmmState, DifferenceOperator};
