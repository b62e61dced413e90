//! Projected gradient for the weighted trajectory least-squares problem
//! `min Σ_k Σ_n β[k][n] ‖q[n] − w_k‖²` subject to `‖q[n+1] − q[n]‖ ≤ s_max`
//! (cyclic). The projection onto the intersection of the hop constraints is
//! computed with Dykstra's alternating projections over the individual hops.

use uav_core::{BetaAllocation, Point, Scenario, Trajectory};

#[derive(Debug, Clone, PartialEq)]
pub struct PgSpec {
    pub max_iters: usize,
    /// Stop once a step moves the iterate less than this (meters).
    pub step_tol: f64,
    pub dykstra_sweeps: usize,
}

impl Default for PgSpec {
    fn default() -> Self {
        Self {
            max_iters: 200_000,
            step_tol: 1e-10,
            dykstra_sweeps: 2000,
        }
    }
}

pub fn weighted_distance(q: &[Point], beta: &BetaAllocation, users: &[Point]) -> f64 {
    let mut total = 0.0;
    for (row, w) in beta.rows().iter().zip(users) {
        for (b, p) in row.iter().zip(q) {
            let dx = p[0] - w[0];
            let dy = p[1] - w[1];
            total += b * (dx * dx + dy * dy);
        }
    }
    total
}

/// Exact projection onto one hop constraint: the hop is shortened
/// symmetrically about its midpoint.
fn project_hop(a: Point, b: Point, s_max: f64) -> (Point, Point) {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
    if len <= s_max {
        return (a, b);
    }
    let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    let u = [d[0] / len * 0.5 * s_max, d[1] / len * 0.5 * s_max];
    ([mid[0] - u[0], mid[1] - u[1]], [mid[0] + u[0], mid[1] + u[1]])
}

fn dykstra(v: &[Point], s_max: f64, sweeps: usize) -> Vec<Point> {
    let n = v.len();
    let mut x = v.to_vec();
    // One correction pair per hop constraint.
    let mut corr = vec![[[0.0; 2]; 2]; n];
    for _ in 0..sweeps {
        let mut moved = 0.0f64;
        for i in 0..n {
            let j = (i + 1) % n;
            let ya = [x[i][0] + corr[i][0][0], x[i][1] + corr[i][0][1]];
            let yb = [x[j][0] + corr[i][1][0], x[j][1] + corr[i][1][1]];
            let (pa, pb) = project_hop(ya, yb, s_max);
            corr[i] = [[ya[0] - pa[0], ya[1] - pa[1]], [yb[0] - pb[0], yb[1] - pb[1]]];
            moved = moved
                .max((pa[0] - x[i][0]).abs())
                .max((pa[1] - x[i][1]).abs())
                .max((pb[0] - x[j][0]).abs())
                .max((pb[1] - x[j][1]).abs());
            x[i] = pa;
            x[j] = pb;
        }
        if moved < 1e-12 * (1.0 + s_max) {
            break;
        }
    }
    x
}

/// Shrinks the trajectory towards its centroid until every hop fits; hop
/// lengths scale linearly with the shrink factor.
fn make_feasible(q: &[Point], s_max: f64) -> Vec<Point> {
    let n = q.len();
    let hop = |q: &[Point]| {
        (0..n)
            .map(|i| {
                let j = (i + 1) % n;
                ((q[j][0] - q[i][0]).powi(2) + (q[j][1] - q[i][1]).powi(2)).sqrt()
            })
            .fold(0.0, f64::max)
    };
    let c = q.iter().fold([0.0, 0.0], |a, p| [a[0] + p[0] / n as f64, a[1] + p[1] / n as f64]);
    let mut f = (s_max / hop(q)).min(1.0);
    loop {
        let out: Vec<Point> = q
            .iter()
            .map(|p| [c[0] + f * (p[0] - c[0]), c[1] + f * (p[1] - c[1])])
            .collect();
        if hop(&out) <= s_max {
            return out;
        }
        f *= 1.0 - 1e-12;
    }
}

/// Projected gradient with diminishing steps `1 / (L (1 + j / 1000))`,
/// `L = 2 · 2 max_n Σ_k β[k][n]`, started at `q_init`.
pub fn oracle_subp2(
    q_init: &Trajectory,
    beta: &BetaAllocation,
    s: &Scenario,
    spec: &PgSpec,
) -> Trajectory {
    let n = q_init.waypoints.len();
    let users = s.users();
    let s_max = s.s_max();
    let mut a = vec![0.0; n];
    let mut wsum = vec![[0.0; 2]; n];
    for (row, w) in beta.rows().iter().zip(users) {
        for i in 0..n {
            a[i] += row[i];
            wsum[i][0] += row[i] * w[0];
            wsum[i][1] += row[i] * w[1];
        }
    }
    let a_max = a.iter().copied().fold(0.0, f64::max);
    if a_max == 0.0 {
        return q_init.clone();
    }
    let lipschitz = 2.0 * (2.0 * a_max);
    let mut q = q_init.waypoints.clone();
    for j in 0..spec.max_iters {
        let step = 1.0 / (lipschitz * (1.0 + j as f64 / 1000.0));
        let moved: Vec<Point> = (0..n)
            .map(|i| {
                let g = [2.0 * (a[i] * q[i][0] - wsum[i][0]), 2.0 * (a[i] * q[i][1] - wsum[i][1])];
                [q[i][0] - step * g[0], q[i][1] - step * g[1]]
            })
            .collect();
        let next = dykstra(&moved, s_max, spec.dykstra_sweeps);
        let delta = next
            .iter()
            .zip(&q)
            .map(|(x, y)| (x[0] - y[0]).abs().max((x[1] - y[1]).abs()))
            .fold(0.0, f64::max);
        q = next;
        if delta < spec.step_tol {
            break;
        }
    }
    Trajectory::new(make_feasible(&q, s_max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use uav_core::ScenarioParams;

    #[test]
    fn hop_projection_is_symmetric() {
        let (a, b) = project_hop([0.0, 0.0], [4.0, 0.0], 2.0);
        assert_eq!(a, [1.0, 0.0]);
        assert_eq!(b, [3.0, 0.0]);
    }

    #[test]
    fn zero_beta_keeps_start() {
        let s = Scenario::new(ScenarioParams::with_defaults(vec![[0.0, 0.0]], 4)).unwrap();
        let q = Trajectory::new(vec![[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]);
        let out = oracle_subp2(&q, &BetaAllocation::zeros(1, 4), &s, &PgSpec::default());
        assert_eq!(out, q);
    }

    #[test]
    fn single_user_attracts_every_waypoint() {
        let mut p = ScenarioParams::with_defaults(vec![[30.0, -20.0]], 5);
        p.v_max_mps = 1e5;
        let s = Scenario::new(p).unwrap();
        let q = Trajectory::new((0..5).map(|i| [i as f64, 0.0]).collect());
        let beta = BetaAllocation::from_rows(vec![vec![1.0, 2.0, 3.0, 4.0, 5.0]]).unwrap();
        let out = oracle_subp2(&q, &beta, &s, &PgSpec::default());
        for p in out.waypoints {
            assert!((p[0] - 30.0).abs() < 1e-6 && (p[1] + 20.0).abs() < 1e-6);
        }
    }
}
