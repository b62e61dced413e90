//! End-to-end properties of the alternating solver.

use uav_core::config::SolverConfig;
use uav_core::scenario::{ScenarioParams, CANONICAL_USERS};
use uav_core::solver::{baseline_scenario, initial_trajectory, solve_scenario};
use uav_core::{Exec, Scenario, Termination};

fn scenario(users: Vec<[f64; 2]>, n: usize) -> Scenario {
    Scenario::new(ScenarioParams::with_defaults(users, n)).unwrap()
}

#[test]
fn single_user_ends_up_hovering() {
    let user = [150.0, -90.0];
    let s = scenario(vec![user], 40);
    let r = solve_scenario(&s, &SolverConfig::default());
    assert_eq!(r.termination, Termination::Converged);
    let far = r
        .final_trajectory
        .waypoints
        .iter()
        .map(|q| ((q[0] - user[0]).powi(2) + (q[1] - user[1]).powi(2)).sqrt())
        .fold(0.0, f64::max);
    assert!(far < 1.0, "farthest waypoint {far} m from the user");

    // Hovering gives every slot the same gain, so the budget splits evenly.
    let h0 = s.gamma_tilde() / s.altitude().powi(2);
    let ideal = s.bandwidth() * (1.0 + s.p_max() * h0 / 40.0).log2();
    assert!((r.final_tau - ideal).abs() <= 1e-4 * ideal, "{} vs {ideal}", r.final_tau);
}

#[test]
fn mirrored_users_get_equal_throughput() {
    let s = scenario(vec![[-350.0, 0.0], [350.0, 0.0]], 48);
    let r = solve_scenario(&s, &SolverConfig::default());
    let (a, b) = (r.user_avg_throughput[0], r.user_avg_throughput[1]);
    assert!((a - b).abs() <= 1e-4 * a.max(b), "{a} vs {b}");
    assert!(r.final_tau >= baseline_scenario(&s, &SolverConfig::default()).final_tau);
}

#[test]
fn geometry_scaling_leaves_throughput_unchanged() {
    // Doubling every length cuts every gain by four; four times the power
    // restores the same SNRs.
    let base = ScenarioParams::canonical(36);
    let mut big = base.clone();
    big.users = base.users.iter().map(|w| [2.0 * w[0], 2.0 * w[1]]).collect();
    big.altitude_m *= 2.0;
    big.v_max_mps *= 2.0;
    big.p_max_w *= 4.0;
    let cfg = SolverConfig::default();
    let r1 = baseline_scenario(&Scenario::new(base.clone()).unwrap(), &cfg);
    let r2 = baseline_scenario(&Scenario::new(big.clone()).unwrap(), &cfg);
    assert!((r1.final_tau - r2.final_tau).abs() <= 1e-9 * r1.final_tau);

    let r1 = solve_scenario(&Scenario::new(base).unwrap(), &cfg);
    let r2 = solve_scenario(&Scenario::new(big).unwrap(), &cfg);
    assert!((r1.final_tau - r2.final_tau).abs() <= 1e-3 * r1.final_tau, "{} vs {}", r1.final_tau, r2.final_tau);
}

#[test]
fn repeated_and_sequential_runs_agree_bitwise() {
    let s = Scenario::new(ScenarioParams::canonical(40)).unwrap();
    let par = SolverConfig {
        exec: Exec::Parallel,
        ..SolverConfig::default()
    };
    let seq = SolverConfig {
        exec: Exec::Sequential,
        ..SolverConfig::default()
    };
    let a = solve_scenario(&s, &par);
    let b = solve_scenario(&s, &par);
    let c = solve_scenario(&s, &seq);
    for other in [&b, &c] {
        assert_eq!(a.tau_trace, other.tau_trace);
        assert_eq!(a.final_trajectory, other.final_trajectory);
        assert_eq!(a.final_beta, other.final_beta);
    }
}

#[test]
fn baseline_keeps_the_circle_and_spends_the_budget() {
    let s = Scenario::new(ScenarioParams::canonical(30)).unwrap();
    let r = baseline_scenario(&s, &SolverConfig::default());
    assert_eq!(r.operator_factorizations, 0);
    assert_eq!(r.final_trajectory, initial_trajectory(&s));
    assert!((r.total_power() - s.p_max()).abs() <= 1e-4 * s.p_max());
    assert_eq!(s.num_users(), CANONICAL_USERS.len());
}

#[test]
fn iteration_cap_is_reported() {
    let s = Scenario::new(ScenarioParams::canonical(60)).unwrap();
    let cfg = SolverConfig {
        max_outer_iters: 2,
        ..SolverConfig::default()
    };
    let r = solve_scenario(&s, &cfg);
    assert_eq!(r.termination, Termination::MaxIters);
    assert!(r.final_trajectory.max_hop() <= s.s_max());
    assert!(r.total_power() <= s.p_max() * (1.0 + 1e-9));
}
