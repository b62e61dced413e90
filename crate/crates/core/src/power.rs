//! Power subproblem: max-min throughput over the received-SNR variables for a
//! fixed trajectory.
//!
//! The max-min problem is solved through its power-minimization counterpart.
//! For a rate target τ each user's minimum-power allocation is a water-fill
//! `β[n] = (B h[n] λ / (N K ln 2) − 1)⁺` with one multiplier per user. The
//! resulting allocation is rescaled to spend the whole budget, τ is raised to
//! the new minimum average rate, and the process repeats until the
//! minimum-power allocation for τ spends the budget.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::scenario::{min_avg_throughput, power_used, rate, GainMatrix, Scenario};

/// Bisection steps for the water level; 200 halvings exhaust f64 resolution.
pub const MAX_BISECTION_STEPS: usize = 200;

/// Received SNR `β[k][n] = p[k][n] h[k][n]`, one row per user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaAllocation {
    rows: Vec<Vec<f64>>,
}

impl BetaAllocation {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Shape("beta rows must be non-empty and equally long".into()));
        }
        if rows.iter().flatten().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return Err(Error::Argument {
                name: "beta",
                reason: "entries must be finite and non-negative".into(),
            });
        }
        Ok(Self { rows })
    }

    pub fn zeros(num_users: usize, num_slots: usize) -> Self {
        Self {
            rows: vec![vec![0.0; num_slots]; num_users],
        }
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.rows[k]
    }

    pub fn num_users(&self) -> usize {
        self.rows.len()
    }

    pub fn num_slots(&self) -> usize {
        self.rows[0].len()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|b| b * c).collect())
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().flatten().all(|b| *b == 0.0)
    }

    /// Transmit powers `p = β / h`.
    pub fn powers(&self, h: &GainMatrix) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .zip(h.rows())
            .map(|(b, g)| b.iter().zip(g).map(|(b, g)| b / g).collect())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaterfillResult {
    pub beta_row: Vec<f64>,
    /// Per-user multiplier of the rate constraint.
    pub lambda: f64,
    pub achieved_rate: f64,
}

/// Absolute rate tolerance used by the water-level bisection.
pub fn rate_tolerance(tau: f64) -> f64 {
    tau * 1e-10 + 1e-6
}

/// Minimum-power allocation for one user that reaches an average rate `tau`.
pub fn waterfill_user(h_row: &[f64], tau: f64, s: &Scenario) -> Result<WaterfillResult> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::Argument {
            name: "tau",
            reason: format!("rate target must be finite and non-negative, got {tau}"),
        });
    }
    if h_row.is_empty() || h_row.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
        return Err(Error::Argument {
            name: "h_row",
            reason: "gains must be finite and positive".into(),
        });
    }
    let n = h_row.len();
    if tau == 0.0 {
        return Ok(WaterfillResult {
            beta_row: vec![0.0; n],
            lambda: 0.0,
            achieved_rate: 0.0,
        });
    }

    let k = s.num_users() as f64;
    let b = s.bandwidth();
    let slope = b / (n as f64 * k * LN_2);
    let level = |lambda: f64| -> Vec<f64> {
        h_row
            .iter()
            .map(|h| (slope * h * lambda - 1.0).max(0.0))
            .collect()
    };
    let avg_rate = |beta: &[f64]| beta.iter().map(|x| rate(s, *x)).sum::<f64>() / n as f64;
    let rate_at = |lambda: f64| avg_rate(&level(lambda));

    // Every slot reaches rate τ once slope·h·λ ≥ 2^{Kτ/B}, so this λ overshoots.
    let h_min = h_row.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = ((k * tau / b).exp2() + 1.0) / (slope * h_min);
    let mut doublings = 0;
    while rate_at(hi) <= tau {
        hi *= 2.0;
        doublings += 1;
        if !hi.is_finite() || doublings > 2048 {
            return Err(Error::Numerical {
                stage: "water-level bracket",
                iteration: doublings,
            });
        }
    }

    let tol = rate_tolerance(tau);
    let mut lo = 0.0;
    let mut lambda = hi;
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let r = rate_at(mid);
        if (r - tau).abs() <= tol {
            lambda = mid;
            break;
        }
        if r < tau {
            lo = mid;
        } else {
            hi = mid;
        }
        lambda = hi;
    }
    let beta_row = level(lambda);
    let achieved_rate = avg_rate(&beta_row);
    Ok(WaterfillResult {
        beta_row,
        lambda,
        achieved_rate,
    })
}

/// Minimum total power reaching average rate `tau` for every user. The users
/// decouple, so each row is water-filled independently.
pub fn power_min(h: &GainMatrix, tau: f64, s: &Scenario) -> Result<(BetaAllocation, f64)> {
    power_min_with(h, tau, s, Exec::default())
}

pub fn power_min_with(
    h: &GainMatrix,
    tau: f64,
    s: &Scenario,
    exec: Exec,
) -> Result<(BetaAllocation, f64)> {
    check_shape(h, s)?;
    let rows = exec
        .map(h.rows(), |row| waterfill_user(row, tau, s).map(|w| w.beta_row))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let beta = BetaAllocation { rows };
    let p = power_used(&beta, h);
    Ok((beta, p))
}

/// Uniformly rescales `beta` so that it spends exactly `p_max`.
pub fn scale_to_budget(beta: &BetaAllocation, h: &GainMatrix, p_max: f64) -> Result<BetaAllocation> {
    let p = power_used(beta, h);
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::DegenerateAllocation);
    }
    if p == p_max {
        return Ok(beta.clone());
    }
    Ok(beta.scaled(p_max / p))
}

/// Uniform power split `p_max / (K N)` expressed as received SNR.
pub fn uniform_allocation(h: &GainMatrix, p_max: f64) -> BetaAllocation {
    let share = p_max / (h.num_users() * h.num_slots()) as f64;
    BetaAllocation {
        rows: h
            .rows()
            .iter()
            .map(|r| r.iter().map(|g| g * share).collect())
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RescaleStep {
    /// Rate target handed to the power minimization.
    pub tau_target: f64,
    /// Power of the minimum-power allocation for that target.
    pub min_power: f64,
    /// Minimum average rate after rescaling to the budget.
    pub tau_scaled: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSolution {
    pub beta: BetaAllocation,
    pub tau: f64,
    pub trace: Vec<RescaleStep>,
}

/// Hard cap on rescaling rounds; the loop normally stops after a handful.
pub const MAX_RESCALE_ROUNDS: usize = 10_000;

/// Max-min throughput allocation for fixed gains, spending exactly `p_max`.
pub fn solve_subp1(h: &GainMatrix, s: &Scenario, cfg: &SolverConfig) -> Result<PowerSolution> {
    solve_subp1_warm(h, s, cfg, None)
}

/// As [`solve_subp1`], additionally seeding the rate target with `warm`
/// rescaled to the budget when that beats the uniform split.
pub fn solve_subp1_warm(
    h: &GainMatrix,
    s: &Scenario,
    cfg: &SolverConfig,
    warm: Option<&BetaAllocation>,
) -> Result<PowerSolution> {
    check_shape(h, s)?;
    let p_max = s.p_max();
    let mut beta = uniform_allocation(h, p_max);
    let mut tau = min_avg_throughput(s, &beta);
    if let Some(w) = warm {
        if w.num_users() != h.num_users() || w.num_slots() != h.num_slots() {
            return Err(Error::Shape("warm start does not match the gain matrix".into()));
        }
        if let Ok(scaled) = scale_to_budget(w, h, p_max) {
            let t = min_avg_throughput(s, &scaled);
            if t > tau {
                beta = scaled;
                tau = t;
            }
        }
    }

    let mut trace = Vec::new();
    for round in 0..MAX_RESCALE_ROUNDS {
        let (candidate, min_power) = power_min_with(h, tau, s, cfg.exec)?;
        if !min_power.is_finite() {
            return Err(Error::Numerical {
                stage: "power minimization",
                iteration: round,
            });
        }
        let scaled = scale_to_budget(&candidate, h, p_max)?;
        let tau_scaled = min_avg_throughput(s, &scaled);
        if !tau_scaled.is_finite() {
            return Err(Error::Numerical {
                stage: "budget rescaling",
                iteration: round,
            });
        }
        trace.push(RescaleStep {
            tau_target: tau,
            min_power,
            tau_scaled,
        });
        let stalled = tau_scaled <= tau * (1.0 + cfg.eps_power);
        if tau_scaled > tau {
            beta = scaled;
            tau = tau_scaled;
        }
        if (min_power - p_max).abs() <= cfg.eps_power * p_max || stalled {
            break;
        }
    }
    Ok(PowerSolution { beta, tau, trace })
}

fn check_shape(h: &GainMatrix, s: &Scenario) -> Result<()> {
    if h.num_users() != s.num_users() {
        return Err(Error::Shape(format!(
            "gain matrix has {} rows, scenario has {} users",
            h.num_users(),
            s.num_users()
        )));
    }
    Ok(())
}
