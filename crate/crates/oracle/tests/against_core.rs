//! Cross-checks between the solver paths of `uav-core` and the reference
//! implementations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uav_core::config::SolverConfig;
use uav_core::power::{power_min, solve_subp1, waterfill_user};
use uav_core::scenario::{channel_gains, power_used, ScenarioParams};
use uav_core::solver::initial_trajectory;
use uav_core::trajectory::{
    build_operator, m_update, q_update, solve_subp2, AdmmState, SlotWeights,
};
use uav_core::{BetaAllocation, Exec, GainMatrix, Point, Scenario, Trajectory};
use uav_oracle::{
    dense_solve, difference_system_matrix, grid_minimize, oracle_subp2, oracle_waterfill,
    subgradient_max_min, weighted_distance, GridSpec, PgSpec,
};

fn scenario(k: usize, n: usize) -> Scenario {
    let users = (0..k).map(|i| [50.0 * i as f64, -30.0 * i as f64]).collect();
    Scenario::new(ScenarioParams::with_defaults(users, n.max(2))).unwrap()
}

fn row_power(beta: &[f64], h: &[f64]) -> f64 {
    beta.iter().zip(h).map(|(b, h)| b / h).sum()
}

#[test]
fn single_slot_waterfill_matches_inversion() {
    let s = scenario(1, 2);
    let grid = GridSpec::default();
    let b = oracle_waterfill(&[3.0], 2e7, &s, &grid).unwrap();
    assert!((b[0] - 3.0).abs() < 1e-12);
    let w = waterfill_user(&[3.0], 2e7, &s).unwrap();
    assert!((w.beta_row[0] - 3.0).abs() < 1e-9);
    assert_eq!(oracle_waterfill(&[1.0, 1.0], 0.0, &s, &grid).unwrap(), vec![0.0, 0.0]);
    assert!(oracle_waterfill(&[1.0; 4], 1.0, &s, &grid).is_err());
}

#[test]
fn equal_gains_split_evenly() {
    let s = scenario(1, 2);
    let b = oracle_waterfill(&[1.0, 1.0], 1.2e7, &s, &GridSpec::default()).unwrap();
    assert!((b[0] - b[1]).abs() <= 1e-8 * b[0]);
}

#[test]
fn two_slot_waterfill_matches_grid() {
    let s = scenario(1, 2);
    let h = [2.0, 1.0];
    for tau in [1e5, 2e6, 1.5e7, 4e7] {
        let w = waterfill_user(&h, tau, &s).unwrap();
        let o = oracle_waterfill(&h, tau, &s, &GridSpec::default()).unwrap();
        let (pw, po) = (row_power(&w.beta_row, &h), row_power(&o, &h));
        assert!((pw - po).abs() <= 1e-6 * po, "tau {tau}: {pw} vs {po}");
    }
}

#[test]
fn power_min_matches_per_user_oracles() {
    let s = scenario(2, 3);
    let h = GainMatrix::from_rows(vec![vec![5.0, 1.0, 0.2], vec![0.3, 0.9, 2.0]]).unwrap();
    let tau = 1.1e6;
    let (_, p) = power_min(&h, tau, &s).unwrap();
    let expected: f64 = h
        .rows()
        .iter()
        .map(|row| row_power(&oracle_waterfill(row, tau, &s, &GridSpec::default()).unwrap(), row))
        .sum();
    assert!((p - expected).abs() <= 1e-6 * expected);
}

#[test]
fn single_user_subp1_is_full_budget_waterfill() {
    // Classic water-fill at fixed total power, by bisection on the level.
    let s = scenario(1, 6);
    let h = [4e3, 1e3, 2.5e2, 6e2, 9e3, 1e2];
    let gains = GainMatrix::from_rows(vec![h.to_vec()]).unwrap();
    let cfg = SolverConfig {
        eps_power: 1e-10,
        ..SolverConfig::default()
    };
    let sol = solve_subp1(&gains, &s, &cfg).unwrap();
    let alloc = |mu: f64| -> Vec<f64> { h.iter().map(|g| (mu * g - 1.0).max(0.0)).collect() };
    let (mut lo, mut hi) = (0.0, 1.0);
    while row_power(&alloc(hi), &h) < s.p_max() {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if row_power(&alloc(mid), &h) < s.p_max() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let reference = alloc(hi);
    for (a, b) in sol.beta.row(0).iter().zip(&reference) {
        assert!((a - b).abs() <= 1e-6 * (1.0 + b), "{a} vs {b}");
    }
}

#[test]
fn subp1_on_canonical_circle_matches_dual_oracle() {
    let s = Scenario::new(ScenarioParams::canonical(16)).unwrap();
    let h = channel_gains(&s, &initial_trajectory(&s));
    let sol = solve_subp1(&h, &s, &SolverConfig::default()).unwrap();
    let bounds = subgradient_max_min(&h, &s, 20_000, 1e-8);
    assert!(bounds.relative_gap() <= 1e-6, "oracle gap {}", bounds.relative_gap());
    assert!((sol.tau - bounds.upper).abs() <= 1e-4 * bounds.upper);
    assert!(sol.tau <= bounds.upper * (1.0 + 1e-12));
}

#[test]
fn operator_solve_matches_dense_elimination() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in [2usize, 3, 4, 9, 32] {
        let op = build_operator(n, 0.01, 1.25).unwrap();
        let rhs: Vec<Point> = (0..n)
            .map(|_| [rng.random_range(-1e3..1e3), rng.random_range(-1e3..1e3)])
            .collect();
        let x = op.solve(&rhs);
        let a = difference_system_matrix(n, 0.01, 1.25);
        for c in 0..2 {
            let b: Vec<f64> = rhs.iter().map(|p| p[c]).collect();
            let xd = dense_solve(&a, &b).unwrap();
            let scale = xd.iter().map(|v| v * v).sum::<f64>().sqrt();
            let err = x.iter().zip(&xd).map(|(p, d)| (p[c] - d).powi(2)).sum::<f64>().sqrt();
            assert!(err <= 1e-10 * scale, "n = {n}: {err}");
        }
    }
}

#[test]
fn q_update_beats_random_perturbations() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 4;
    let op = build_operator(n, 0.3, 1.25).unwrap();
    let rand_pts = |rng: &mut ChaCha8Rng, s: f64| -> Vec<Point> {
        (0..n).map(|_| [rng.random_range(-s..s), rng.random_range(-s..s)]).collect()
    };
    let mut st = AdmmState::warm_start(&rand_pts(&mut rng, 10.0), &op, 3.0);
    st.m = rand_pts(&mut rng, 10.0);
    st.t = rand_pts(&mut rng, 1.0);
    st.z = rand_pts(&mut rng, 3.0);
    st.y = rand_pts(&mut rng, 1.0);
    let objective = |q: &[Point]| -> f64 {
        let mut v = 0.0;
        for i in 0..n {
            let j = (i + 1) % n;
            for c in 0..2 {
                v += st.rho1 * (q[i][c] - st.m[i][c] + st.t[i][c]).powi(2);
                v += st.rho2 * (q[i][c] - q[j][c] - st.z[i][c] + st.y[i][c]).powi(2);
            }
        }
        v
    };
    let q = q_update(&st, &op);
    let best = objective(&q);
    for _ in 0..1000 {
        let scale = 10f64.powf(rng.random_range(-4.0..0.0));
        let p: Vec<Point> = q
            .iter()
            .map(|x| [x[0] + scale * rng.random_range(-1.0..1.0), x[1] + scale * rng.random_range(-1.0..1.0)])
            .collect();
        assert!(objective(&p) >= best);
    }
}

#[test]
fn m_update_matches_grid_minimizer() {
    // Coordinates stay within tens of meters: the grid compares objective
    // values, which only resolve 1e-6 m while the objective is small.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10 {
        let users: Vec<Point> = (0..3)
            .map(|_| [rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)])
            .collect();
        let betas: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..5.0)).collect();
        let q = [rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0)];
        let t = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
        let rho1 = 0.7;
        let beta = BetaAllocation::from_rows(betas.iter().map(|b| vec![*b]).collect()).unwrap();
        let weights = SlotWeights::new(&beta, &users);
        let m = m_update(&[q], &[t], &weights, rho1, Exec::Sequential)[0];
        let b = [q[0] + t[0], q[1] + t[1]];
        let f = |x: &[f64]| -> Option<f64> {
            let mut v = rho1 * ((x[0] - b[0]).powi(2) + (x[1] - b[1]).powi(2));
            for (bk, w) in betas.iter().zip(&users) {
                v += bk * ((x[0] - w[0]).powi(2) + (x[1] - w[1]).powi(2));
            }
            Some(v)
        };
        let g = grid_minimize(&[[-100.0, 100.0]; 2], &GridSpec::default(), f).unwrap();
        assert!(((m[0] - g[0]).powi(2) + (m[1] - g[1]).powi(2)).sqrt() <= 1e-6);
    }
}

#[test]
fn subp2_on_canonical_sixteen_slots_matches_projected_gradient() {
    let s = Scenario::new(ScenarioParams::canonical(16)).unwrap();
    let q0 = initial_trajectory(&s);
    let h = channel_gains(&s, &q0);
    let cfg = SolverConfig::default();
    let beta = solve_subp1(&h, &s, &cfg).unwrap().beta;
    let op = build_operator(16, cfg.rho1, cfg.rho2).unwrap();
    let admm = solve_subp2(&q0, &beta, &s, &cfg, &op).unwrap();
    let reference = oracle_subp2(&q0, &beta, &s, &PgSpec::default());
    let f_admm = weighted_distance(&admm.trajectory.waypoints, &beta, s.users());
    let f_ref = weighted_distance(&reference.waypoints, &beta, s.users());
    assert!((f_admm - f_ref).abs() <= 1e-3 * f_ref, "{f_admm} vs {f_ref}");
    assert!(reference.max_hop() <= s.s_max());
    // Less weighted distance never costs more power for the same allocation.
    let p0 = power_used(&beta, &h);
    let p1 = power_used(&beta, &channel_gains(&s, &admm.trajectory));
    assert!(p1 <= p0 + 1e-9);
}

#[test]
fn subp2_does_not_worsen_the_warm_start() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10 {
        let k = rng.random_range(1..4);
        let n = rng.random_range(3..20);
        let users: Vec<Point> = (0..k)
            .map(|_| [rng.random_range(-400.0..400.0), rng.random_range(-400.0..400.0)])
            .collect();
        let mut p = ScenarioParams::with_defaults(users, n);
        p.v_max_mps = rng.random_range(5.0..80.0);
        let s = Scenario::new(p).unwrap();
        let q0: Trajectory = initial_trajectory(&s);
        let beta = BetaAllocation::from_rows(
            (0..k).map(|_| (0..n).map(|_| rng.random_range(0.0..10.0)).collect()).collect(),
        )
        .unwrap();
        let cfg = SolverConfig::default();
        let op = build_operator(n, cfg.rho1, cfg.rho2).unwrap();
        let sol = solve_subp2(&q0, &beta, &s, &cfg, &op).unwrap();
        let f0 = weighted_distance(&q0.waypoints, &beta, s.users());
        let f1 = weighted_distance(&sol.trajectory.waypoints, &beta, s.users());
        assert!(f1 <= f0 + 1e-6);
        assert!(sol.trajectory.max_hop() <= s.s_max());
    }
}
