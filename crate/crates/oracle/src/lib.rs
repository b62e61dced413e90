//! Reference solvers used to check `uav-core`.
//!
//! Nothing here calls into the solver paths of `uav-core`; only its plain data
//! types (`Scenario`, `GainMatrix`, `BetaAllocation`, `Trajectory`) are
//! shared. Every routine is slow on purpose and favors a first-principles
//! route: grid search, dense elimination, projected (sub)gradients.

mod dense;
mod grid;
mod max_min;
mod waypoints;

pub use dense::{dense_solve, difference_system_matrix};
pub use grid::{grid_minimize, GridSpec};
pub use max_min::{subgradient_max_min, MaxMinBounds};
pub use waypoints::{oracle_subp2, weighted_distance, PgSpec};

use thiserror::Error;
use uav_core::Scenario;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("grid oracle supports at most {max} slots, got {got}")]
    UnsupportedSize { got: usize, max: usize },
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("singular matrix at column {0}")]
    Singular(usize),
}

/// Brute-force minimum-power allocation for one user reaching average rate
/// `tau`, searched over the split of the required rate across slots.
///
/// With `u_n = log₂(1 + β_n)` the rate constraint is `Σ u_n = N K τ / B`, so
/// the search runs over the first `N − 1` shares and the last one is implied.
pub fn oracle_waterfill(
    h_row: &[f64],
    tau: f64,
    s: &Scenario,
    grid: &GridSpec,
) -> Result<Vec<f64>, OracleError> {
    let n = h_row.len();
    if n == 0 || n > 3 {
        return Err(OracleError::UnsupportedSize { got: n, max: 3 });
    }
    grid.validate()?;
    let total = n as f64 * s.num_users() as f64 * tau / s.bandwidth();
    if tau <= 0.0 {
        return Ok(vec![0.0; n]);
    }
    let betas = |shares: &[f64]| -> Option<Vec<f64>> {
        let last = total - shares.iter().sum::<f64>();
        if last < 0.0 || shares.iter().any(|u| *u < 0.0) {
            return None;
        }
        Some(
            shares
                .iter()
                .chain(std::iter::once(&last))
                .map(|u| u.exp2() - 1.0)
                .collect(),
        )
    };
    let power = |b: &[f64]| b.iter().zip(h_row).map(|(b, h)| b / h).sum::<f64>();
    if n == 1 {
        return Ok(betas(&[]).expect("single slot takes the whole rate"));
    }
    let bounds = vec![[0.0, total]; n - 1];
    let best = grid_minimize(&bounds, grid, |x| betas(x).map(|b| power(&b)))?;
    Ok(betas(&best).expect("grid minimizer is feasible"))
}
