//! Alternating outer loop: power update for the current trajectory, then a
//! trajectory update for the new powers, until τ stops increasing.

use std::time::Instant;

use serde::Serialize;

use crate::config::{Config, SolverConfig};
use crate::error::{Error, Result};
use crate::power::{solve_subp1_warm, BetaAllocation, PowerSolution};
use crate::scenario::{
    avg_throughputs, channel_gains_with, power_used, Scenario, Trajectory,
};
use crate::trajectory::{build_operator, solve_subp2, AdmmTrace, DifferenceOperator};

/// Guard on the denominator of the fractional τ increase (bps).
pub const TAU_FLOOR_BPS: f64 = 1e-3;

/// Evenly spaced circle around the user centroid with radius
/// `v_max δ (N − 1) / (2π)`, shrunk if needed so every hop fits `s_max`.
pub fn initial_trajectory(s: &Scenario) -> Trajectory {
    let n = s.num_slots();
    let s_max = s.s_max();
    let r_circle = s_max * (n as f64 - 1.0) / (2.0 * std::f64::consts::PI);
    let r_feasible = s_max / (2.0 * (std::f64::consts::PI / n as f64).sin());
    let mut r = r_circle.min(r_feasible);
    let center = s.user_centroid();
    loop {
        let q = Trajectory::new(
            (0..n)
                .map(|i| {
                    let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                    [center[0] + r * a.cos(), center[1] + r * a.sin()]
                })
                .collect(),
        );
        if q.max_hop() <= s_max {
            return q;
        }
        r *= 1.0 - 1e-12;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIters,
    Numerical,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PhaseTimes {
    pub factorization_s: f64,
    pub power_s: f64,
    pub trajectory_s: f64,
    pub total_s: f64,
}

/// Summary of one trajectory update, as written to the report file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmmSummary {
    pub iterations: usize,
    pub final_primal_residual: f64,
    pub final_dual_residual: f64,
    pub hit_max_iters: bool,
    pub kept_initial: bool,
    pub objective_init: f64,
    pub objective_final: f64,
}

impl From<&AdmmTrace> for AdmmSummary {
    fn from(t: &AdmmTrace) -> Self {
        Self {
            iterations: t.iterations,
            final_primal_residual: t.primal_residuals.last().copied().unwrap_or(0.0),
            final_dual_residual: t.dual_residuals.last().copied().unwrap_or(0.0),
            hit_max_iters: t.hit_max_iters,
            kept_initial: t.kept_initial,
            objective_init: t.objective_init,
            objective_final: t.objective_final,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub scenario: Scenario,
    pub solver: SolverConfig,
    pub outer_iterations: usize,
    /// Max-min average throughput after each power update (bps).
    pub tau_trace: Vec<f64>,
    /// Power the iteration's allocation needs on the trajectory produced by
    /// the same iteration (W); equals `p_max` when no trajectory update ran.
    pub power_trace: Vec<f64>,
    /// Full residual histories, one per trajectory update.
    #[serde(skip)]
    pub admm_traces: Vec<AdmmTrace>,
    pub admm_summaries: Vec<AdmmSummary>,
    pub final_tau: f64,
    pub final_trajectory: Trajectory,
    pub final_beta: BetaAllocation,
    /// Transmit power per user and slot, `β / h` on the final trajectory (W).
    pub final_power: Vec<Vec<f64>>,
    pub user_avg_throughput: Vec<f64>,
    pub operator_factorizations: usize,
    pub wall_clock: PhaseTimes,
    pub termination: Termination,
    pub message: Option<String>,
}

impl SolveReport {
    pub fn total_power(&self) -> f64 {
        self.final_power.iter().flatten().sum()
    }

    /// Per-slot, per-user rates of the final allocation (bps).
    pub fn final_rates(&self) -> Vec<Vec<f64>> {
        crate::scenario::rates(&self.scenario, &self.final_beta)
    }
}

/// Builds the ADMM linear-system factorization on first use and counts how
/// many times it was built.
#[derive(Debug, Default)]
struct OperatorCache {
    op: Option<DifferenceOperator>,
    builds: usize,
}

impl OperatorCache {
    fn get(&mut self, n: usize, cfg: &SolverConfig) -> Result<&DifferenceOperator> {
        let stale = self
            .op
            .as_ref()
            .is_none_or(|op| op.len() != n || op.rho1() != cfg.rho1 || op.rho2() != cfg.rho2);
        if stale {
            self.op = Some(build_operator(n, cfg.rho1, cfg.rho2)?);
            self.builds += 1;
        }
        Ok(self.op.as_ref().expect("operator was just built"))
    }
}

struct Run<'a> {
    s: &'a Scenario,
    cfg: &'a SolverConfig,
    times: PhaseTimes,
    tau_trace: Vec<f64>,
    power_trace: Vec<f64>,
    admm_traces: Vec<AdmmTrace>,
}

impl<'a> Run<'a> {
    fn new(s: &'a Scenario, cfg: &'a SolverConfig) -> Self {
        Self {
            s,
            cfg,
            times: PhaseTimes::default(),
            tau_trace: Vec::new(),
            power_trace: Vec::new(),
            admm_traces: Vec::new(),
        }
    }

    fn power_step(&mut self, q: &Trajectory, warm: Option<&BetaAllocation>) -> Result<PowerSolution> {
        let t0 = Instant::now();
        let h = channel_gains_with(self.s, q, self.cfg.exec);
        let sol = solve_subp1_warm(&h, self.s, self.cfg, warm);
        self.times.power_s += t0.elapsed().as_secs_f64();
        sol
    }

    fn finish(
        self,
        started: Instant,
        outer_iterations: usize,
        q: Trajectory,
        power: Option<PowerSolution>,
        builds: usize,
        termination: Termination,
        message: Option<String>,
    ) -> SolveReport {
        let s = self.s;
        let h = channel_gains_with(s, &q, self.cfg.exec);
        let (beta, tau) = match power {
            Some(p) => (p.beta, p.tau),
            None => (BetaAllocation::zeros(s.num_users(), s.num_slots()), 0.0),
        };
        let final_power = beta.powers(&h);
        let user_avg_throughput = avg_throughputs(s, &beta);
        let mut times = self.times;
        times.total_s = started.elapsed().as_secs_f64();
        SolveReport {
            scenario: s.clone(),
            solver: self.cfg.clone(),
            outer_iterations,
            tau_trace: self.tau_trace,
            power_trace: self.power_trace,
            admm_summaries: self.admm_traces.iter().map(AdmmSummary::from).collect(),
            admm_traces: self.admm_traces,
            final_tau: tau,
            final_trajectory: q,
            final_beta: beta,
            final_power,
            user_avg_throughput,
            operator_factorizations: builds,
            wall_clock: times,
            termination,
            message,
        }
    }
}

/// Runs the alternating optimization from the circular initial trajectory.
pub fn solve(config: &Config) -> SolveReport {
    solve_scenario(&config.scenario, &config.solver)
}

pub fn solve_scenario(s: &Scenario, cfg: &SolverConfig) -> SolveReport {
    solve_from(s, cfg, initial_trajectory(s))
}

/// Runs the alternating optimization from a caller-supplied feasible
/// trajectory.
pub fn solve_from(s: &Scenario, cfg: &SolverConfig, q0: Trajectory) -> SolveReport {
    let started = Instant::now();
    let mut run = Run::new(s, cfg);
    let mut cache = OperatorCache::default();

    let t0 = Instant::now();
    let built = cache.get(s.num_slots(), cfg).map(|_| ());
    run.times.factorization_s += t0.elapsed().as_secs_f64();
    if let Err(e) = built {
        return run.finish(started, 0, q0, None, cache.builds, Termination::Numerical, Some(e.to_string()));
    }

    let mut q = q0;
    let mut last: Option<PowerSolution> = None;
    for it in 1..=cfg.max_outer_iters {
        let sol = match run.power_step(&q, last.as_ref().map(|p| &p.beta)) {
            Ok(sol) => sol,
            Err(e) => return numerical(run, started, it, q, last, &cache, e),
        };
        run.tau_trace.push(sol.tau);

        if let Some(prev) = &last {
            let gain = (sol.tau - prev.tau) / prev.tau.max(TAU_FLOOR_BPS);
            if gain < cfg.eps_outer {
                run.power_trace.push(s.p_max());
                return run.finish(started, it, q, Some(sol), cache.builds, Termination::Converged, None);
            }
        }

        let t0 = Instant::now();
        let step = cache
            .get(s.num_slots(), cfg)
            .and_then(|op| solve_subp2(&q, &sol.beta, s, cfg, op));
        run.times.trajectory_s += t0.elapsed().as_secs_f64();
        let step = match step {
            Ok(step) => step,
            Err(e) => return numerical(run, started, it, q, Some(sol), &cache, e),
        };
        let h_new = channel_gains_with(s, &step.trajectory, cfg.exec);
        run.power_trace.push(power_used(&sol.beta, &h_new));
        run.admm_traces.push(step.trace);
        q = step.trajectory;
        last = Some(sol);
    }

    // The loop ended on a trajectory update; refresh the powers for it.
    let it = cfg.max_outer_iters;
    match run.power_step(&q, last.as_ref().map(|p| &p.beta)) {
        Ok(sol) => run.finish(started, it, q, Some(sol), cache.builds, Termination::MaxIters, None),
        Err(e) => numerical(run, started, it, q, last, &cache, e),
    }
}

fn numerical(
    run: Run<'_>,
    started: Instant,
    it: usize,
    q: Trajectory,
    last: Option<PowerSolution>,
    cache: &OperatorCache,
    e: Error,
) -> SolveReport {
    // Keep the pair consistent: a stale allocation is dropped if it was
    // computed for a different trajectory.
    let s = run.s;
    let power = last.filter(|p| {
        let h = channel_gains_with(s, &q, run.cfg.exec);
        power_used(&p.beta, &h) <= s.p_max() * (1.0 + 1e-9)
    });
    run.finish(started, it, q, power, cache.builds, Termination::Numerical, Some(e.to_string()))
}

/// Optimal powers on the fixed initial circle; no trajectory update.
pub fn evaluate_baseline(config: &Config) -> SolveReport {
    baseline_scenario(&config.scenario, &config.solver)
}

pub fn baseline_scenario(s: &Scenario, cfg: &SolverConfig) -> SolveReport {
    let started = Instant::now();
    let mut run = Run::new(s, cfg);
    let q = initial_trajectory(s);
    match run.power_step(&q, None) {
        Ok(sol) => {
            run.tau_trace.push(sol.tau);
            run.power_trace.push(s.p_max());
            run.finish(started, 1, q, Some(sol), 0, Termination::Converged, None)
        }
        Err(e) => run.finish(started, 1, q, None, 0, Termination::Numerical, Some(e.to_string())),
    }
}
