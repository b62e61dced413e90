//! Trajectory subproblem: for fixed received SNRs, find the periodic
//! trajectory minimizing `Σ_k Σ_n β[k][n] ‖q[n] − w_k‖²` under the per-slot
//! hop limit.
//!
//! Solved by consensus ADMM over the splitting `m = q`, `D q = z`,
//! `‖z_n‖ ≤ s_max`, where `D = D₀ ⊗ I₂` stacks the cyclic hop differences
//! `q[n] − q[n+1]`. Each iteration performs
//!
//! 1. `q ← (ρ₁ I + ρ₂ DᵀD)⁻¹ (ρ₂ Dᵀ(z − y) + ρ₁ (m − t))`
//! 2. `z_n ← Π(q[n] − q[n+1] + y_n)`, projection onto the hop ball
//! 3. `m[n] ← (ρ₁ (q[n] + t[n]) + Σ_k β[k][n] w_k) / (ρ₁ + Σ_k β[k][n])`
//! 4. `t ← t + q − m`, `y ← y + D q − z`
//!
//! `D₀ᵀD₀` is circulant, so the linear system in step 1 is diagonalized by
//! the DFT. The eigenvalues and FFT plans are computed once per slot count
//! and penalty pair.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geom::{self, Point};
use crate::power::BetaAllocation;
use crate::scenario::{Scenario, Trajectory};

/// Cyclic hop-difference operator with a cached solver for
/// `ρ₁ I + ρ₂ DᵀD`.
#[derive(Clone)]
pub struct DifferenceOperator {
    n: usize,
    rho1: f64,
    rho2: f64,
    /// Eigenvalues `ρ₁ + 4 ρ₂ sin²(π j / N)` of the circulant system matrix.
    eigenvalues: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for DifferenceOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DifferenceOperator")
            .field("n", &self.n)
            .field("rho1", &self.rho1)
            .field("rho2", &self.rho2)
            .finish_non_exhaustive()
    }
}

/// Factorizes `ρ₁ I + ρ₂ DᵀD` for `n` slots.
pub fn build_operator(n: usize, rho1: f64, rho2: f64) -> Result<DifferenceOperator> {
    if n < 2 {
        return Err(Error::Argument {
            name: "n",
            reason: format!("need at least 2 slots, got {n}"),
        });
    }
    if !(rho1.is_finite() && rho1 > 0.0 && rho2.is_finite() && rho2 >= 0.0) {
        return Err(Error::Argument {
            name: "rho",
            reason: format!("penalties must satisfy rho1 > 0, rho2 >= 0 (got {rho1}, {rho2})"),
        });
    }
    let eigenvalues = (0..n)
        .map(|j| {
            let s = (std::f64::consts::PI * j as f64 / n as f64).sin();
            rho1 + 4.0 * rho2 * s * s
        })
        .collect();
    let mut planner = FftPlanner::new();
    Ok(DifferenceOperator {
        n,
        rho1,
        rho2,
        eigenvalues,
        forward: planner.plan_fft_forward(n),
        inverse: planner.plan_fft_inverse(n),
    })
}

impl DifferenceOperator {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn rho1(&self) -> f64 {
        self.rho1
    }

    pub fn rho2(&self) -> f64 {
        self.rho2
    }

    /// Dense `D₀`: row `n` holds `+1` at column `n` and `−1` at `n + 1 (mod N)`.
    pub fn d0_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let mut row = vec![0.0; n];
                row[i] += 1.0;
                row[(i + 1) % n] -= 1.0;
                row
            })
            .collect()
    }

    /// `D q`: hop displacements `q[n] − q[n+1]`, wrapping at the end.
    pub fn apply(&self, q: &[Point]) -> Vec<Point> {
        let n = q.len();
        (0..n).map(|i| geom::sub(q[i], q[(i + 1) % n])).collect()
    }

    /// `Dᵀ z`: entry `n` is `z_n − z_{n−1}`, wrapping at the start.
    pub fn apply_transpose(&self, z: &[Point]) -> Vec<Point> {
        let n = z.len();
        (0..n).map(|i| geom::sub(z[i], z[(i + n - 1) % n])).collect()
    }

    /// `(ρ₁ I + ρ₂ DᵀD) x` computed directly, for residual checks.
    pub fn apply_system(&self, x: &[Point]) -> Vec<Point> {
        let dtd = self.apply_transpose(&self.apply(x));
        x.iter()
            .zip(dtd)
            .map(|(xi, di)| geom::add(geom::scale(*xi, self.rho1), geom::scale(di, self.rho2)))
            .collect()
    }

    /// Solves `(ρ₁ I + ρ₂ DᵀD) x = rhs`. Both coordinates are solved at once by
    /// packing them into the real and imaginary parts of one complex signal.
    pub fn solve(&self, rhs: &[Point]) -> Vec<Point> {
        assert_eq!(rhs.len(), self.n, "rhs length must match the operator");
        let mut buf: Vec<Complex<f64>> = rhs.iter().map(|p| Complex::new(p[0], p[1])).collect();
        self.forward.process(&mut buf);
        let norm = self.n as f64;
        for (c, lam) in buf.iter_mut().zip(&self.eigenvalues) {
            *c /= lam * norm;
        }
        self.inverse.process(&mut buf);
        buf.into_iter().map(|c| [c.re, c.im]).collect()
    }
}

/// Radial projection onto the disc of radius `s_max`.
#[inline]
pub fn project_ball(x: Point, s_max: f64) -> Point {
    let r = geom::norm(x);
    if r <= s_max {
        x
    } else {
        geom::scale(x, s_max / r)
    }
}

/// Per-slot aggregates `a_n = Σ_k β[k][n]` and `ŵ_n = Σ_k β[k][n] w_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotWeights {
    pub total: Vec<f64>,
    pub weighted_users: Vec<Point>,
}

impl SlotWeights {
    pub fn new(beta: &BetaAllocation, users: &[Point]) -> Self {
        let n = beta.num_slots();
        let mut total = vec![0.0; n];
        let mut weighted_users = vec![[0.0; 2]; n];
        for (row, w) in beta.rows().iter().zip(users) {
            for (i, b) in row.iter().enumerate() {
                total[i] += b;
                weighted_users[i] = geom::add(weighted_users[i], geom::scale(*w, *b));
            }
        }
        Self {
            total,
            weighted_users,
        }
    }

    /// Rescales all weights so the largest slot total is one. The minimizer
    /// of the weighted objective is unchanged; only its scale relative to
    /// the ADMM penalties moves.
    pub fn normalized(mut self) -> Self {
        let peak = self.total.iter().copied().fold(0.0, f64::max);
        if peak > 0.0 {
            let c = 1.0 / peak;
            self.total.iter_mut().for_each(|a| *a *= c);
            self.weighted_users
                .iter_mut()
                .for_each(|w| *w = geom::scale(*w, c));
        }
        self
    }
}

/// Weighted squared distance `Σ_k Σ_n β[k][n] ‖q[n] − w_k‖²`.
pub fn trajectory_objective(q: &[Point], beta: &BetaAllocation, users: &[Point]) -> f64 {
    beta.rows()
        .iter()
        .zip(users)
        .map(|(row, w)| {
            row.iter()
                .zip(q)
                .map(|(b, p)| b * geom::dist_sq(*p, *w))
                .sum::<f64>()
        })
        .sum()
}

/// ADMM iterates; all vectors hold one point per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub q: Vec<Point>,
    pub z: Vec<Point>,
    pub m: Vec<Point>,
    pub t: Vec<Point>,
    pub y: Vec<Point>,
    pub rho1: f64,
    pub rho2: f64,
    pub iter: usize,
    pub primal_residuals: Vec<f64>,
    pub dual_residuals: Vec<f64>,
}

impl AdmmState {
    /// Warm start `q = m = q_init`, `z = Π(D q_init)`, zero duals.
    pub fn warm_start(q_init: &[Point], op: &DifferenceOperator, s_max: f64) -> Self {
        let n = q_init.len();
        Self {
            q: q_init.to_vec(),
            z: op
                .apply(q_init)
                .into_iter()
                .map(|d| project_ball(d, s_max))
                .collect(),
            m: q_init.to_vec(),
            t: vec![[0.0; 2]; n],
            y: vec![[0.0; 2]; n],
            rho1: op.rho1(),
            rho2: op.rho2(),
            iter: 0,
            primal_residuals: Vec::new(),
            dual_residuals: Vec::new(),
        }
    }

    /// Runs one full iteration and records the residuals; returns
    /// `(primal, dual)`.
    pub fn step(
        &mut self,
        op: &DifferenceOperator,
        weights: &SlotWeights,
        s_max: f64,
        stale_q_in_z: bool,
        exec: Exec,
    ) -> (f64, f64) {
        let q_new = q_update(self, op);
        let z_new = if stale_q_in_z {
            z_update(&self.q, &self.y, s_max, op)
        } else {
            z_update(&q_new, &self.y, s_max, op)
        };
        let m_new = m_update(&q_new, &self.t, weights, self.rho1, exec);

        let dz: Vec<Point> = z_new.iter().zip(&self.z).map(|(a, b)| geom::sub(*a, *b)).collect();
        let dual = self.rho1 * geom::stacked_dist(&m_new, &self.m)
            + self.rho2 * geom::stacked_norm(&op.apply_transpose(&dz));

        self.q = q_new;
        self.z = z_new;
        self.m = m_new;
        let (t, y) = dual_update(self, op);
        self.t = t;
        self.y = y;

        let dq = op.apply(&self.q);
        let primal =
            geom::stacked_dist(&self.q, &self.m) + geom::stacked_dist(&dq, &self.z);
        self.iter += 1;
        self.primal_residuals.push(primal);
        self.dual_residuals.push(dual);
        (primal, dual)
    }

    pub fn is_finite(&self) -> bool {
        [&self.q, &self.z, &self.m, &self.t, &self.y]
            .iter()
            .all(|v| v.iter().all(|p| p[0].is_finite() && p[1].is_finite()))
    }
}

/// Exact minimizer of `ρ₁‖q − m + t‖² + ρ₂‖D q − z + y‖²`.
pub fn q_update(st: &AdmmState, op: &DifferenceOperator) -> Vec<Point> {
    let zy: Vec<Point> = st.z.iter().zip(&st.y).map(|(z, y)| geom::sub(*z, *y)).collect();
    let rhs: Vec<Point> = op
        .apply_transpose(&zy)
        .into_iter()
        .zip(st.m.iter().zip(&st.t))
        .map(|(d, (m, t))| {
            geom::add(
                geom::scale(d, st.rho2),
                geom::scale(geom::sub(*m, *t), st.rho1),
            )
        })
        .collect();
    op.solve(&rhs)
}

/// Projects each shifted hop `q[n] − q[n+1] + y_n` onto the hop ball.
pub fn z_update(q: &[Point], y: &[Point], s_max: f64, op: &DifferenceOperator) -> Vec<Point> {
    op.apply(q)
        .into_iter()
        .zip(y)
        .map(|(d, y)| project_ball(geom::add(d, *y), s_max))
        .collect()
}

/// Closed-form consensus update, independent per slot.
pub fn m_update(
    q: &[Point],
    t: &[Point],
    weights: &SlotWeights,
    rho1: f64,
    exec: Exec,
) -> Vec<Point> {
    exec.map_range(q.len(), 4096, |i| {
        let b = geom::add(q[i], t[i]);
        let num = geom::add(geom::scale(b, rho1), weights.weighted_users[i]);
        geom::scale(num, 1.0 / (rho1 + weights.total[i]))
    })
}

/// Scaled dual ascent `t + q − m` and `y + D q − z`.
pub fn dual_update(st: &AdmmState, op: &DifferenceOperator) -> (Vec<Point>, Vec<Point>) {
    let t = st
        .t
        .iter()
        .zip(st.q.iter().zip(&st.m))
        .map(|(t, (q, m))| geom::add(*t, geom::sub(*q, *m)))
        .collect();
    let y = st
        .y
        .iter()
        .zip(op.apply(&st.q).into_iter().zip(&st.z))
        .map(|(y, (d, z))| geom::add(*y, geom::sub(d, *z)))
        .collect();
    (t, y)
}

/// Clamp target for the hard hop projection; a hair under `s_max` so the
/// recomputed hop length never rounds above the limit.
const CLAMP_SHRINK: f64 = 1.0 - 1e-12;

fn is_strictly_feasible(q: &[Point], s_max: f64) -> bool {
    let n = q.len();
    (0..n).all(|i| geom::dist(q[(i + 1) % n], q[i]) <= s_max)
}

/// Makes `q` satisfy every hop limit exactly: clamps hops one by one for up
/// to `N` sweeps, then, if needed, blends towards the feasible `fallback`.
pub fn enforce_hop_limit(q: &[Point], s_max: f64, fallback: &[Point]) -> Vec<Point> {
    let n = q.len();
    let mut out = q.to_vec();
    for _ in 0..n {
        if is_strictly_feasible(&out, s_max) {
            return out;
        }
        for i in 0..n {
            let j = (i + 1) % n;
            let d = geom::sub(out[j], out[i]);
            let len = geom::norm(d);
            if len > s_max {
                out[j] = geom::add(out[i], geom::scale(d, s_max * CLAMP_SHRINK / len));
            }
        }
    }
    if is_strictly_feasible(&out, s_max) {
        return out;
    }
    // The feasible set is convex and contains `fallback`.
    let blend = |theta: f64| -> Vec<Point> {
        out.iter()
            .zip(fallback)
            .map(|(a, b)| geom::add(geom::scale(*a, 1.0 - theta), geom::scale(*b, theta)))
            .collect()
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if is_strictly_feasible(&blend(mid), s_max) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    blend(hi)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmmTrace {
    pub iterations: usize,
    pub primal_residuals: Vec<f64>,
    pub dual_residuals: Vec<f64>,
    pub hit_max_iters: bool,
    pub objective_init: f64,
    pub objective_final: f64,
    /// The ADMM output did not improve on the warm start, which was kept.
    pub kept_initial: bool,
}

impl AdmmTrace {
    pub fn final_residual(&self) -> f64 {
        match (self.primal_residuals.last(), self.dual_residuals.last()) {
            (Some(p), Some(d)) => p.max(*d),
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySolution {
    pub trajectory: Trajectory,
    pub trace: AdmmTrace,
}

/// Trajectory update for fixed `beta`, warm-started at the feasible `q_init`.
///
/// The slot weights are normalized to a peak of one before iterating, so the
/// penalties act on a fixed scale whatever the SNR level.
/// Returns the consensus copy `m` after the hop limits are enforced exactly.
/// When that point does not improve the objective over `q_init`, `q_init` is
/// returned instead.
pub fn solve_subp2(
    q_init: &Trajectory,
    beta: &BetaAllocation,
    s: &Scenario,
    cfg: &SolverConfig,
    op: &DifferenceOperator,
) -> Result<TrajectorySolution> {
    let n = q_init.len();
    if n != op.len() || beta.num_slots() != n || beta.num_users() != s.num_users() {
        return Err(Error::Shape(format!(
            "trajectory has {n} waypoints, operator {}, beta {}x{}",
            op.len(),
            beta.num_users(),
            beta.num_slots()
        )));
    }
    let users = s.users();
    let objective_init = trajectory_objective(&q_init.waypoints, beta, users);
    if beta.is_zero() {
        return Ok(TrajectorySolution {
            trajectory: q_init.clone(),
            trace: AdmmTrace {
                iterations: 0,
                primal_residuals: Vec::new(),
                dual_residuals: Vec::new(),
                hit_max_iters: false,
                objective_init,
                objective_final: objective_init,
                kept_initial: true,
            },
        });
    }

    let s_max = s.s_max();
    let weights = SlotWeights::new(beta, users).normalized();
    let mut st = AdmmState::warm_start(&q_init.waypoints, op, s_max);
    let threshold = cfg.tol_admm * ((2 * n) as f64).sqrt();
    let mut converged = false;
    while st.iter < cfg.max_admm_iters {
        let (primal, dual) = st.step(op, &weights, s_max, cfg.admm_z_uses_stale_q, cfg.exec);
        if !(primal.is_finite() && dual.is_finite()) || !st.is_finite() {
            return Err(Error::Numerical {
                stage: "trajectory ADMM",
                iteration: st.iter,
            });
        }
        if primal.max(dual) <= threshold {
            converged = true;
            break;
        }
    }

    let candidate = enforce_hop_limit(&st.m, s_max, &q_init.waypoints);
    let objective_candidate = trajectory_objective(&candidate, beta, users);
    let kept_initial = !(objective_candidate <= objective_init);
    let (waypoints, objective_final) = if kept_initial {
        (q_init.waypoints.clone(), objective_init)
    } else {
        (candidate, objective_candidate)
    };
    Ok(TrajectorySolution {
        trajectory: Trajectory::new(waypoints),
        trace: AdmmTrace {
            iterations: st.iter,
            primal_residuals: st.primal_residuals,
            dual_residuals: st.dual_residuals,
            hit_max_iters: !converged,
            objective_init,
            objective_final,
            kept_initial,
        },
    })
}
