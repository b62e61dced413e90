//! Physical model: users, flight envelope, line-of-sight channel and rates.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geom::{self, Point};
use crate::power::BetaAllocation;

/// Ground-user layout used throughout the numerical study (meters).
pub const CANONICAL_USERS: [Point; 6] = [
    [-300.0, 400.0],
    [-400.0, 400.0],
    [500.0, -200.0],
    [300.0, 980.0],
    [100.0, 200.0],
    [-800.0, 450.0],
];

/// Converts a noise power spectral density from dBm/Hz to W/Hz.
pub fn dbm_per_hz_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Raw physical parameters. Turned into a [`Scenario`] by validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub users: Vec<Point>,
    pub altitude_m: f64,
    pub bandwidth_hz: f64,
    pub slot_s: f64,
    pub num_slots: usize,
    pub v_max_mps: f64,
    pub p_max_w: f64,
    pub noise_psd_w_hz: f64,
    pub gamma0: f64,
}

impl ScenarioParams {
    /// Default physical setup (H = 100 m, V_max = 50 m/s, B = 10 MHz,
    /// δ = 1 s, P_max = 0.5 W, N₀ = -170 dBm/Hz, γ₀ = 1e-5).
    pub fn with_defaults(users: Vec<Point>, num_slots: usize) -> Self {
        Self {
            users,
            altitude_m: 100.0,
            bandwidth_hz: 1e7,
            slot_s: 1.0,
            num_slots,
            v_max_mps: 50.0,
            p_max_w: 0.5,
            noise_psd_w_hz: dbm_per_hz_to_watts(-170.0),
            gamma0: 1e-5,
        }
    }

    pub fn canonical(num_slots: usize) -> Self {
        Self::with_defaults(CANONICAL_USERS.to_vec(), num_slots)
    }
}

/// Validated, immutable physical setup.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    params: ScenarioParams,
}

fn positive(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::Validation {
            field: field.to_string(),
            value: value.to_string(),
            reason: "must be finite and strictly positive".into(),
        })
    }
}

impl Scenario {
    pub fn new(params: ScenarioParams) -> Result<Self> {
        if params.users.is_empty() {
            return Err(Error::Validation {
                field: "users".into(),
                value: "[]".into(),
                reason: "at least one user is required".into(),
            });
        }
        if let Some(w) = params.users.iter().find(|w| !(w[0].is_finite() && w[1].is_finite())) {
            return Err(Error::Validation {
                field: "users".into(),
                value: format!("{w:?}"),
                reason: "coordinates must be finite".into(),
            });
        }
        if params.num_slots < 2 {
            return Err(Error::Validation {
                field: "num_slots".into(),
                value: params.num_slots.to_string(),
                reason: "a periodic trajectory needs at least 2 slots".into(),
            });
        }
        positive("altitude_m", params.altitude_m)?;
        positive("bandwidth_hz", params.bandwidth_hz)?;
        positive("slot_s", params.slot_s)?;
        positive("v_max_mps", params.v_max_mps)?;
        positive("p_max_w", params.p_max_w)?;
        positive("noise_psd_w_hz", params.noise_psd_w_hz)?;
        positive("gamma0", params.gamma0)?;
        let s = Self { params };
        positive("v_max_mps * slot_s", s.s_max())?;
        positive("gamma0 * K / (bandwidth_hz * noise_psd_w_hz)", s.gamma_tilde())?;
        Ok(s)
    }

    pub fn params(&self) -> &ScenarioParams {
        &self.params
    }

    pub fn users(&self) -> &[Point] {
        &self.params.users
    }

    pub fn num_users(&self) -> usize {
        self.params.users.len()
    }

    pub fn num_slots(&self) -> usize {
        self.params.num_slots
    }

    pub fn altitude(&self) -> f64 {
        self.params.altitude_m
    }

    pub fn bandwidth(&self) -> f64 {
        self.params.bandwidth_hz
    }

    pub fn p_max(&self) -> f64 {
        self.params.p_max_w
    }

    /// Maximum horizontal distance per slot, `v_max * δ`.
    pub fn s_max(&self) -> f64 {
        self.params.v_max_mps * self.params.slot_s
    }

    /// Normalized reference gain `γ₀ K / (B N₀)`.
    pub fn gamma_tilde(&self) -> f64 {
        self.params.gamma0 * self.num_users() as f64
            / (self.params.bandwidth_hz * self.params.noise_psd_w_hz)
    }

    /// Arithmetic mean of the user positions.
    pub fn user_centroid(&self) -> Point {
        let k = self.num_users() as f64;
        let sum = self
            .users()
            .iter()
            .fold([0.0, 0.0], |acc, w| geom::add(acc, *w));
        geom::scale(sum, 1.0 / k)
    }
}

/// Periodic sequence of horizontal waypoints; `q[N+1]` is `q[1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub waypoints: Vec<Point>,
}

impl Trajectory {
    pub fn new(waypoints: Vec<Point>) -> Self {
        Self { waypoints }
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    /// Hop lengths `‖q[n+1] − q[n]‖`, including the wrap-around hop last.
    pub fn hop_lengths(&self) -> Vec<f64> {
        let n = self.waypoints.len();
        (0..n)
            .map(|i| geom::dist(self.waypoints[(i + 1) % n], self.waypoints[i]))
            .collect()
    }

    pub fn max_hop(&self) -> f64 {
        self.hop_lengths().into_iter().fold(0.0, f64::max)
    }

    /// Checks every hop against `s_max * (1 + tol)`.
    pub fn check_feasible(&self, s_max: f64, tol: f64) -> Result<()> {
        let limit = s_max * (1.0 + tol);
        match self
            .hop_lengths()
            .into_iter()
            .enumerate()
            .find(|(_, d)| !(*d <= limit))
        {
            None => Ok(()),
            Some((i, d)) => Err(Error::Validation {
                field: format!("trajectory hop {}", i + 1),
                value: d.to_string(),
                reason: format!("exceeds the per-slot distance limit {s_max}"),
            }),
        }
    }

    pub fn translated(&self, by: Point) -> Self {
        Self::new(self.waypoints.iter().map(|q| geom::add(*q, by)).collect())
    }
}

/// Effective gains `h[k][n] = γ̃₀ / (H² + ‖q[n] − w_k‖²)`, one row per user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainMatrix {
    rows: Vec<Vec<f64>>,
}

impl GainMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Shape("gain rows must be non-empty and equally long".into()));
        }
        if rows.iter().flatten().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::Argument {
                name: "gains",
                reason: "every gain must be finite and positive".into(),
            });
        }
        Ok(Self { rows })
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
}

pub fn channel_gains(s: &Scenario, q: &Trajectory) -> GainMatrix {
    channel_gains_with(s, q, Exec::default())
}

pub fn channel_gains_with(s: &Scenario, q: &Trajectory, exec: Exec) -> GainMatrix {
    let g = s.gamma_tilde();
    let h2 = s.altitude() * s.altitude();
    let rows = exec.map(s.users(), |w| {
        q.waypoints
            .iter()
            .map(|p| g / (h2 + geom::dist_sq(*p, *w)))
            .collect()
    });
    GainMatrix { rows }
}

/// Rate in bps of one user-slot with received SNR `beta`.
pub fn rate(s: &Scenario, beta: f64) -> f64 {
    s.bandwidth() / s.num_users() as f64 * beta.ln_1p() / LN_2
}

/// Per-user, per-slot rates `(B/K) log₂(1 + β)`.
pub fn rates(s: &Scenario, beta: &BetaAllocation) -> Vec<Vec<f64>> {
    beta.rows()
        .iter()
        .map(|row| row.iter().map(|b| rate(s, *b)).collect())
        .collect()
}

/// Time-averaged rate of each user.
pub fn avg_throughputs(s: &Scenario, beta: &BetaAllocation) -> Vec<f64> {
    beta.rows()
        .iter()
        .map(|row| row.iter().map(|b| rate(s, *b)).sum::<f64>() / row.len() as f64)
        .collect()
}

pub fn min_avg_throughput(s: &Scenario, beta: &BetaAllocation) -> f64 {
    avg_throughputs(s, beta).into_iter().fold(f64::INFINITY, f64::min)
}

/// Total transmit power `Σ β / h` in Watts.
pub fn power_used(beta: &BetaAllocation, h: &GainMatrix) -> f64 {
    beta.rows()
        .iter()
        .zip(h.rows())
        .map(|(b, g)| b.iter().zip(g).map(|(b, g)| b / g).sum::<f64>())
        .sum()
}
